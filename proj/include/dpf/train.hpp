// AMSGrad with decoupled weight decay, a step learning-rate schedule, and
// the resampling training loop.
#pragma once

#include <functional>

#include "dpf/model.hpp"

namespace dpf {

struct OptimizerConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
};

class Optimizer {
public:
    Optimizer() = default;
    explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

    OptimizerConfig& config() { return cfg_; }
    const OptimizerConfig& config() const { return cfg_; }
    uint64_t step_count() const { return t_; }

    // AMSGrad update with bias correction and v_hat = max(v_hat, v), then
    // decoupled decay theta -= lr * wd * theta.
    void step(ParamStore& params);

    // Moment buffers, keyed like the ParamStore; exposed for checkpointing.
    std::map<std::string, Matrix>& m() { return m_; }
    std::map<std::string, Matrix>& v() { return v_; }
    std::map<std::string, Matrix>& v_hat() { return vhat_; }
    void set_step_count(uint64_t t) { t_ = t; }

private:
    OptimizerConfig cfg_;
    std::map<std::string, Matrix> m_, v_, vhat_;
    uint64_t t_ = 0;
};

struct Schedule {
    std::vector<int> milestones;  // epochs at which lr decays
    double gamma = 0.1;
    double base_lr = 1e-3;

    double lr_at(int epoch) const {
        double lr = base_lr;
        for (int m : milestones)
            if (epoch >= m) lr *= gamma;
        return lr;
    }
};

struct TrainConfig {
    int epochs = 100;
    int batch_size = 4;       // shapes per step
    int points_per_cloud = 2048;
    uint64_t seed = 0;
    int log_interval = 10;    // steps
    int checkpoint_interval = 0;  // epochs; 0 disables periodic saves
    double clip_norm = 0.0;   // 0 disables clipping
    OptimizerConfig opt;
    Schedule schedule;
};

struct StepInfo {
    int epoch;
    int step;  // global step counter
    ElboTerms terms;
    double lr;
};

// Per epoch: shuffle shapes, resample an encoder cloud and a decoder cloud
// per shape per visit, average the batch gradients, step the optimizer.
// Deterministic given (config, seed, dataset). The callback fires every
// log_interval steps; the epoch_end hook (if set) after each epoch.
std::vector<double> train(DPFNet& net, const std::vector<Mesh>& data,
                          const TrainConfig& cfg, Optimizer& opt, Rng& rng,
                          int start_epoch = 0,
                          const std::function<void(const StepInfo&)>& sink = {},
                          const std::function<void(int epoch)>& epoch_end = {});

// Mean per-point negative log-likelihood of clouds sampled from held-out
// meshes, using posterior-mean latents. Evaluation helper for monitoring.
double heldout_nll(DPFNet& net, const std::vector<Mesh>& meshes, int points, Rng& rng);

}  // namespace dpf
