// Permutation-invariant inference network: shared per-point MLP, max-pool
// across points, fully-connected head emitting a diagonal Gaussian over the
// latent shape space.
#pragma once

#include "dpf/ops.hpp"

namespace dpf {

struct EncoderConfig {
    std::vector<int> point_widths = {3, 64, 128, 256, 512};
    int head_hidden = 512;
    int latent_dim = 128;
};

class PointNetEncoder {
public:
    PointNetEncoder() = default;
    PointNetEncoder(EncoderConfig cfg, std::string prefix = "enc.")
        : cfg_(cfg), prefix_(std::move(prefix)) {}

    const EncoderConfig& config() const { return cfg_; }

    void init(ParamStore& ps, Rng& rng) const;

    // (mean 1xD, log_var 1xD); log_var clamped to [-14, 14]. Max-pool routes
    // gradient to the first maximal row per feature.
    std::pair<int, int> encode(Tape& t, ParamStore& ps, int points) const;

private:
    EncoderConfig cfg_;
    std::string prefix_ = "enc.";
};

}  // namespace dpf
