#include "dpf/encoder.hpp"

#include "dpf/flow.hpp"

namespace dpf {

void PointNetEncoder::init(ParamStore& ps, Rng& rng) const {
    const auto& w = cfg_.point_widths;
    if (w.size() < 2 || w.front() != 3)
        throw ParamError("encoder: point widths must start at 3");
    for (size_t i = 0; i + 1 < w.size(); ++i) {
        ps.add(prefix_ + "p" + std::to_string(i) + ".w", init_weight(w[i], w[i + 1], rng));
        ps.add(prefix_ + "p" + std::to_string(i) + ".b", Matrix(1, w[i + 1]));
    }
    ps.add(prefix_ + "h0.w", init_weight(w.back(), cfg_.head_hidden, rng));
    ps.add(prefix_ + "h0.b", Matrix(1, cfg_.head_hidden));
    ps.add(prefix_ + "h1.w", init_weight(cfg_.head_hidden, 2 * cfg_.latent_dim, rng));
    ps.add(prefix_ + "h1.b", Matrix(1, 2 * cfg_.latent_dim));
}

std::pair<int, int> PointNetEncoder::encode(Tape& t, ParamStore& ps, int points) const {
    if (t.value(points).cols != 3)
        throw DimensionError("encode: expected n x 3 cloud, got " +
                             t.value(points).shape_str());
    int h = points;
    for (size_t i = 0; i + 1 < cfg_.point_widths.size(); ++i) {
        h = linear(t, h, t.param(ps, prefix_ + "p" + std::to_string(i) + ".w"),
                   t.param(ps, prefix_ + "p" + std::to_string(i) + ".b"));
        h = t.activation(h, Act::Relu);
    }
    h = t.colwise_max(h);
    h = t.activation(
        linear(t, h, t.param(ps, prefix_ + "h0.w"), t.param(ps, prefix_ + "h0.b")),
        Act::Relu);
    h = linear(t, h, t.param(ps, prefix_ + "h1.w"), t.param(ps, prefix_ + "h1.b"));

    const int D = cfg_.latent_dim;
    std::vector<int> midx(D), vidx(D);
    for (int i = 0; i < D; ++i) {
        midx[i] = i;
        vidx[i] = D + i;
    }
    const int mean = t.gather_cols(h, midx);
    const int log_var = t.clamp(t.gather_cols(h, vidx), kLogVarMin, kLogVarMax);
    return {mean, log_var};
}

}  // namespace dpf
