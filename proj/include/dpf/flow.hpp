// Affine coupling flows: the shape-conditioned point flow (FiLM-modulated
// coupling layers on R^3) and the unconditional latent prior flow on R^D.
// Every layer has a closed-form inverse and an exact log-determinant.
#pragma once

#include <string>
#include <vector>

#include "dpf/geometry.hpp"
#include "dpf/ops.hpp"

namespace dpf {

struct FlowResult {
    int out;      // tape node, transformed matrix
    int log_det;  // tape node, n x 1 accumulated log |det|
};

struct Partition {
    std::vector<int> upd;   // updated group y^u
    std::vector<int> cond;  // conditioning group y^c
};

// Six partitionings of the three point coordinates, cycled deterministically:
// updated sets {0},{1},{2},{1,2},{0,2},{0,1}.
Partition point_partition(int layer_index);

struct PointFlowConfig {
    int layers = 63;
    int latent_dim = 128;
    int trunk_hidden = 64;   // D_inf: y^c is inflated to this width
    int film_hidden = 64;
    int base_hidden = 64;
    double log_scale_bound = 5.0;
};

class PointFlow {
public:
    PointFlow() = default;
    PointFlow(PointFlowConfig cfg, std::string prefix = "pf.")
        : cfg_(cfg), prefix_(std::move(prefix)) {}

    const PointFlowConfig& config() const { return cfg_; }

    // Registers parameters. Hidden layers get small random weights, the
    // scale/shift heads start at zero, so the fresh flow is the identity.
    void init(ParamStore& ps, Rng& rng) const;

    // Single layer, generate direction: x^u = y^u * exp(l) + t, x^c = y^c.
    FlowResult layer_generate(Tape& t, ParamStore& ps, int layer, int y, int z) const;
    // Single layer, normalize direction: y^u = (x^u - t) * exp(-l).
    FlowResult layer_normalize(Tape& t, ParamStore& ps, int layer, int x, int z) const;

    // Full stack. generate: base -> data (layers 0..L-1);
    // normalize: data -> base (inverses, last layer first).
    FlowResult generate(Tape& t, ParamStore& ps, int y, int z) const;
    FlowResult normalize(Tape& t, ParamStore& ps, int x, int z) const;

    // Base Gaussian parameters from z: (mean 1x3, log_var 1x3).
    std::pair<int, int> base_params(Tape& t, ParamStore& ps, int z) const;

    // Per-point log p(x | z), change-of-variables in the normalize direction.
    int log_prob(Tape& t, ParamStore& ps, int x, int z) const;

    // n i.i.d. points given z (1 x D), no gradients.
    Matrix sample(ParamStore& ps, const Matrix& z, int n, Rng& rng) const;

    // Intermediate clouds after the listed generate-direction layer counts
    // (0 = the base Gaussian draw), all from one base draw.
    std::vector<Matrix> trace(ParamStore& ps, const Matrix& z, int n,
                              const std::vector<int>& checkpoints, Rng& rng) const;

private:
    FlowResult layer_apply(Tape& t, ParamStore& ps, int layer, int in, int z,
                           bool inverse) const;
    std::string key(int layer, const char* name) const;

    PointFlowConfig cfg_;
    std::string prefix_ = "pf.";
};

struct PriorFlowConfig {
    int layers = 14;
    int latent_dim = 128;
    int hidden = 256;
    double log_scale_bound = 5.0;
};

class PriorFlow {
public:
    PriorFlow() = default;
    PriorFlow(PriorFlowConfig cfg, std::string prefix = "prior.")
        : cfg_(cfg), prefix_(std::move(prefix)) {}

    const PriorFlowConfig& config() const { return cfg_; }

    // Alternates odd/even and first-half/second-half coordinate splits; the
    // updated side flips every two layers so both groups get transformed.
    Partition partition(int layer_index) const;

    void init(ParamStore& ps, Rng& rng) const;

    FlowResult layer_generate(Tape& t, ParamStore& ps, int layer, int y) const;
    FlowResult layer_normalize(Tape& t, ParamStore& ps, int layer, int x) const;
    FlowResult generate(Tape& t, ParamStore& ps, int y) const;
    FlowResult normalize(Tape& t, ParamStore& ps, int x) const;

    // Per-row log p(z) for z [m x D].
    int log_prob(Tape& t, ParamStore& ps, int z) const;

    Matrix sample(ParamStore& ps, int m, Rng& rng) const;

private:
    FlowResult layer_apply(Tape& t, ParamStore& ps, int layer, int in, bool inverse) const;
    std::string key(int layer, const char* name) const;

    PriorFlowConfig cfg_;
    std::string prefix_ = "prior.";
};

// Fills every parameter whose name starts with `prefix` with scale * N(0,1).
// Test helper for "random parameterization" properties.
void randomize_params(ParamStore& ps, const std::string& prefix, Rng& rng, double scale);

// N(0, 1/fan_in) weight init.
Matrix init_weight(int fan_in, int fan_out, Rng& rng);

}  // namespace dpf
