#include "dpf/model.hpp"

#include <cmath>

namespace dpf {

DPFNet::DPFNet(const ModelConfig& cfg) : cfg_(cfg) {
    EncoderConfig ec;
    ec.point_widths = cfg.encoder_widths;
    ec.head_hidden = cfg.encoder_head_hidden;
    ec.latent_dim = cfg.latent_dim;
    encoder_ = PointNetEncoder(ec);

    PointFlowConfig pc;
    pc.layers = cfg.point_layers;
    pc.latent_dim = cfg.latent_dim;
    pc.trunk_hidden = cfg.d_inf;
    pc.film_hidden = cfg.film_hidden;
    pc.base_hidden = cfg.base_hidden;
    pc.log_scale_bound = cfg.log_scale_bound;
    point_flow_ = PointFlow(pc);

    PriorFlowConfig rc;
    rc.layers = cfg.prior_layers;
    rc.latent_dim = cfg.latent_dim;
    rc.hidden = cfg.prior_hidden;
    rc.log_scale_bound = cfg.log_scale_bound;
    prior_flow_ = PriorFlow(rc);
}

void DPFNet::init(Rng& rng) {
    encoder_.init(params_, rng);
    point_flow_.init(params_, rng);
    prior_flow_.init(params_, rng);
}

ElboTerms DPFNet::elbo(const PointCloud& x_enc, const PointCloud& x_dec, Rng& rng,
                       bool grads) {
    Tape t;
    const int xe = t.constant(x_enc.points);
    const int xd = t.constant(x_dec.points);

    auto [mean, log_var] = encoder_.encode(t, params_, xe);
    const int z = reparam_sample(t, mean, log_var, rng);

    const int recon = t.sum(point_flow_.log_prob(t, params_, xd, z));

    // KL estimate with the same z draw:
    //   KL = -ln p_prior(z) - H(q),  H(q) = 0.5 sum log_var + D/2 (1 + ln 2pi)
    const int log_p_prior = t.sum(prior_flow_.log_prob(t, params_, z));
    const int entropy = t.shift(t.scale(t.sum(log_var), 0.5),
                                0.5 * cfg_.latent_dim * (1.0 + kLn2Pi));
    const int kl = t.sub(t.scale(log_p_prior, -1.0), entropy);

    const int loss = t.sub(kl, recon);
    if (!std::isfinite(t.value(loss).at(0, 0)))
        throw NumericError("elbo: non-finite loss");
    if (grads) t.backward(loss);

    ElboTerms e;
    e.recon = t.value(recon).at(0, 0);
    e.recon_per_point = e.recon / x_dec.size();
    e.kl = t.value(kl).at(0, 0);
    e.loss = t.value(loss).at(0, 0);
    return e;
}

std::vector<PointCloud> DPFNet::generate(int k, int n, Rng& rng) {
    if (k < 1 || n < 1) throw ParamError("generate: k and n must be >= 1");
    const Matrix zs = prior_flow_.sample(params_, k, rng);
    std::vector<PointCloud> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i) {
        Matrix z(1, cfg_.latent_dim);
        for (int j = 0; j < cfg_.latent_dim; ++j) z.at(0, j) = zs.at(i, j);
        out.push_back({point_flow_.sample(params_, z, n, rng)});
    }
    return out;
}

Matrix DPFNet::encode_mean(const PointCloud& x) {
    Tape t;
    auto [mean, log_var] = encoder_.encode(t, params_, t.constant(x.points));
    (void)log_var;
    return t.value(mean);
}

PointCloud DPFNet::reconstruct(const PointCloud& x, int n, Rng& rng, LatentMode mode) {
    if (x.size() < 1) throw DataError("reconstruct: empty input cloud");
    if (n < 1) throw ParamError("reconstruct: n must be >= 1");
    Matrix z;
    if (mode == LatentMode::Mean) {
        z = encode_mean(x);
    } else {
        Tape t;
        auto [mean, log_var] = encoder_.encode(t, params_, t.constant(x.points));
        z = t.value(reparam_sample(t, mean, log_var, rng));
    }
    return {point_flow_.sample(params_, z, n, rng)};
}

std::vector<PointCloud> DPFNet::interpolate(const PointCloud& x1, const PointCloud& x2,
                                            int steps, int n, Rng& rng) {
    if (steps < 2) throw ParamError("interpolate: steps must be >= 2");
    const Matrix z1 = encode_mean(x1);
    const Matrix z2 = encode_mean(x2);
    std::vector<PointCloud> out;
    out.reserve(steps);
    for (int s = 0; s < steps; ++s) {
        const double a = static_cast<double>(s) / (steps - 1);
        Matrix z(1, cfg_.latent_dim);
        for (int j = 0; j < cfg_.latent_dim; ++j)
            z.at(0, j) = (1.0 - a) * z1.at(0, j) + a * z2.at(0, j);
        out.push_back({point_flow_.sample(params_, z, n, rng)});
    }
    return out;
}

std::vector<PointCloud> DPFNet::trace(int n, const std::vector<int>& checkpoints,
                                      Rng& rng) {
    const Matrix z = prior_flow_.sample(params_, 1, rng);
    auto mats = point_flow_.trace(params_, z, n, checkpoints, rng);
    std::vector<PointCloud> out;
    out.reserve(mats.size());
    for (auto& m : mats) out.push_back({std::move(m)});
    return out;
}

}  // namespace dpf
