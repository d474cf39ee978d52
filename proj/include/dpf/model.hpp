// DPF-Net assembly: encoder + latent prior flow + conditional point flow,
// the variational objective, generation, reconstruction, interpolation.
#pragma once

#include "dpf/encoder.hpp"
#include "dpf/flow.hpp"

namespace dpf {

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelConfig {
    int latent_dim = 128;
    int point_layers = 63;
    int prior_layers = 14;
    int d_inf = 64;
    int film_hidden = 64;
    int base_hidden = 64;
    int prior_hidden = 256;
    double log_scale_bound = 5.0;
    std::vector<int> encoder_widths = {3, 64, 128, 256, 512};
    int encoder_head_hidden = 512;
};

struct ElboTerms {
    double recon = 0.0;           // sum over decoded points of log p(x|z)
    double recon_per_point = 0.0;
    double kl = 0.0;              // single-sample estimate
    double loss = 0.0;            // kl - recon, the negative bound
};

class DPFNet {
public:
    DPFNet() = default;
    explicit DPFNet(const ModelConfig& cfg);

    void init(Rng& rng);

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const PointNetEncoder& encoder() const { return encoder_; }
    const PointFlow& point_flow() const { return point_flow_; }
    const PriorFlow& prior_flow() const { return prior_flow_; }

    // Single z draw (K = 1); the same draw serves both the reconstruction
    // term and the KL estimate. When `grads` is true the tape is
    // backpropagated and gradients accumulate into params().
    ElboTerms elbo(const PointCloud& x_enc, const PointCloud& x_dec, Rng& rng,
                   bool grads);

    // k clouds of n points: z ~ prior, then points ~ p(x|z).
    std::vector<PointCloud> generate(int k, int n, Rng& rng);

    enum class LatentMode { Mean, Sample };
    PointCloud reconstruct(const PointCloud& x, int n, Rng& rng, LatentMode mode);

    // Linear interpolation between posterior means; `steps` >= 2 clouds
    // including both endpoints.
    std::vector<PointCloud> interpolate(const PointCloud& x1, const PointCloud& x2,
                                        int steps, int n, Rng& rng);

    // Deformation trace of one generated cloud (see PointFlow::trace).
    std::vector<PointCloud> trace(int n, const std::vector<int>& checkpoints, Rng& rng);

    // Posterior mean latent code for a cloud.
    Matrix encode_mean(const PointCloud& x);

private:
    ModelConfig cfg_;
    ParamStore params_;
    PointNetEncoder encoder_;
    PointFlow point_flow_;
    PriorFlow prior_flow_;
};

}  // namespace dpf
