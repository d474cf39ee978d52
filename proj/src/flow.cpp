#include "dpf/flow.hpp"

#include <algorithm>
#include <cmath>

namespace dpf {

Matrix init_weight(int fan_in, int fan_out, Rng& rng) {
    Matrix w(fan_in, fan_out);
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : w.data) x = s * rng.normal();
    return w;
}

void randomize_params(ParamStore& ps, const std::string& prefix, Rng& rng, double scale) {
    for (auto& [name, e] : ps.entries)
        if (name.rfind(prefix, 0) == 0)
            for (double& x : e.value.data) x = scale * rng.normal();
}

Partition point_partition(int layer_index) {
    static const std::vector<std::vector<int>> upd_cycle = {
        {0}, {1}, {2}, {1, 2}, {0, 2}, {0, 1}};
    const auto& upd = upd_cycle[layer_index % 6];
    Partition p;
    p.upd = upd;
    for (int k = 0; k < 3; ++k)
        if (std::find(upd.begin(), upd.end(), k) == upd.end()) p.cond.push_back(k);
    return p;
}

std::string PointFlow::key(int layer, const char* name) const {
    return prefix_ + "l" + std::to_string(layer) + "." + name;
}

void PointFlow::init(ParamStore& ps, Rng& rng) const {
    const int dh = cfg_.trunk_hidden;
    const int fh = cfg_.film_hidden;
    const int D = cfg_.latent_dim;
    for (int k = 0; k < cfg_.layers; ++k) {
        const Partition p = point_partition(k);
        const int nc = static_cast<int>(p.cond.size());
        const int nu = static_cast<int>(p.upd.size());
        ps.add(key(k, "tw1"), init_weight(nc, dh, rng));
        ps.add(key(k, "tb1"), Matrix(1, dh));
        ps.add(key(k, "tw2"), init_weight(dh, dh, rng));
        ps.add(key(k, "tb2"), Matrix(1, dh));
        ps.add(key(k, "fw1"), init_weight(D, fh, rng));
        ps.add(key(k, "fb1"), Matrix(1, fh));
        ps.add(key(k, "fw2"), init_weight(fh, 2 * dh, rng));
        ps.add(key(k, "fb2"), Matrix(1, 2 * dh));
        // zero heads: the fresh layer is the identity with log_det 0
        ps.add(key(k, "sw"), Matrix(dh, nu));
        ps.add(key(k, "sb"), Matrix(1, nu));
        ps.add(key(k, "shw"), Matrix(dh, nu));
        ps.add(key(k, "shb"), Matrix(1, nu));
    }
    ps.add(prefix_ + "base.w1", init_weight(D, cfg_.base_hidden, rng));
    ps.add(prefix_ + "base.b1", Matrix(1, cfg_.base_hidden));
    ps.add(prefix_ + "base.w2", Matrix(cfg_.base_hidden, 6));
    ps.add(prefix_ + "base.b2", Matrix(1, 6));
}

FlowResult PointFlow::layer_apply(Tape& t, ParamStore& ps, int layer, int in, int z,
                                  bool inverse) const {
    const Partition p = point_partition(layer);
    const int dh = cfg_.trunk_hidden;
    if (t.value(z).rows != 1)
        throw DimensionError("point flow: z must be 1 x D, got " + t.value(z).shape_str());

    const int yc = t.gather_cols(in, p.cond);
    const int yu = t.gather_cols(in, p.upd);

    int h = t.activation(linear(t, yc, t.param(ps, key(layer, "tw1")),
                                t.param(ps, key(layer, "tb1"))),
                         Act::Tanh);
    h = t.activation(
        linear(t, h, t.param(ps, key(layer, "tw2")), t.param(ps, key(layer, "tb2"))),
        Act::Tanh);

    // FiLM coefficients from z; gamma = 1 + raw so all-zero nets modulate
    // with the identity.
    int f = t.activation(linear(t, z, t.param(ps, key(layer, "fw1")),
                                t.param(ps, key(layer, "fb1"))),
                         Act::Tanh);
    f = linear(t, f, t.param(ps, key(layer, "fw2")), t.param(ps, key(layer, "fb2")));
    std::vector<int> gidx(dh), bidx(dh);
    for (int i = 0; i < dh; ++i) {
        gidx[i] = i;
        bidx[i] = dh + i;
    }
    const int gamma = t.shift(t.gather_cols(f, gidx), 1.0);
    const int beta = t.gather_cols(f, bidx);
    h = t.add_row(t.mul_row(h, gamma), beta);

    const int raw =
        linear(t, h, t.param(ps, key(layer, "sw")), t.param(ps, key(layer, "sb")));
    const int ell = t.scale(t.activation(raw, Act::Tanh), cfg_.log_scale_bound);
    const int shift =
        linear(t, h, t.param(ps, key(layer, "shw")), t.param(ps, key(layer, "shb")));

    int out_u, log_det;
    if (!inverse) {
        out_u = t.add(t.mul(yu, t.exp_(ell)), shift);
        log_det = t.row_sum(ell);
    } else {
        out_u = t.mul(t.sub(yu, shift), t.exp_(t.scale(ell, -1.0)));
        log_det = t.scale(t.row_sum(ell), -1.0);
    }
    return {t.combine_cols(out_u, p.upd, yc, p.cond, 3), log_det};
}

FlowResult PointFlow::layer_generate(Tape& t, ParamStore& ps, int layer, int y, int z) const {
    return layer_apply(t, ps, layer, y, z, false);
}
FlowResult PointFlow::layer_normalize(Tape& t, ParamStore& ps, int layer, int x, int z) const {
    return layer_apply(t, ps, layer, x, z, true);
}

FlowResult PointFlow::generate(Tape& t, ParamStore& ps, int y, int z) const {
    FlowResult r = layer_apply(t, ps, 0, y, z, false);
    for (int k = 1; k < cfg_.layers; ++k) {
        FlowResult rk = layer_apply(t, ps, k, r.out, z, false);
        r = {rk.out, t.add(r.log_det, rk.log_det)};
    }
    return r;
}

FlowResult PointFlow::normalize(Tape& t, ParamStore& ps, int x, int z) const {
    FlowResult r = layer_apply(t, ps, cfg_.layers - 1, x, z, true);
    for (int k = cfg_.layers - 2; k >= 0; --k) {
        FlowResult rk = layer_apply(t, ps, k, r.out, z, true);
        r = {rk.out, t.add(r.log_det, rk.log_det)};
    }
    return r;
}

std::pair<int, int> PointFlow::base_params(Tape& t, ParamStore& ps, int z) const {
    int h = t.activation(
        linear(t, z, t.param(ps, prefix_ + "base.w1"), t.param(ps, prefix_ + "base.b1")),
        Act::Tanh);
    h = linear(t, h, t.param(ps, prefix_ + "base.w2"), t.param(ps, prefix_ + "base.b2"));
    return {t.gather_cols(h, {0, 1, 2}), t.gather_cols(h, {3, 4, 5})};
}

int PointFlow::log_prob(Tape& t, ParamStore& ps, int x, int z) const {
    const FlowResult r = normalize(t, ps, x, z);
    auto [mean, log_var] = base_params(t, ps, z);
    const int base_lp = gaussian_log_prob(t, r.out, mean, log_var);
    return t.add(base_lp, r.log_det);
}

Matrix PointFlow::sample(ParamStore& ps, const Matrix& z, int n, Rng& rng) const {
    auto clouds = trace(ps, z, n, {cfg_.layers}, rng);
    return std::move(clouds.front());
}

std::vector<Matrix> PointFlow::trace(ParamStore& ps, const Matrix& z, int n,
                                     const std::vector<int>& checkpoints, Rng& rng) const {
    if (n < 1) throw ParamError("point sample: n must be >= 1");
    for (int c : checkpoints)
        if (c < 0 || c > cfg_.layers)
            throw ParamError("flow trace: checkpoint " + std::to_string(c) +
                             " out of range [0, " + std::to_string(cfg_.layers) + "]");
    Tape t;
    const int zn = t.constant(z);
    auto [mean, log_var] = base_params(t, ps, zn);
    const Matrix& m = t.value(mean);
    Matrix lv = t.value(log_var);
    for (double& v : lv.data) v = std::clamp(v, kLogVarMin, kLogVarMax);
    Matrix y(n, 3);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < 3; ++k)
            y.at(i, k) = m.at(0, k) + std::exp(0.5 * lv.at(0, k)) * rng.normal();

    std::vector<Matrix> result(checkpoints.size());
    int cur = t.constant(std::move(y));
    int depth = 0;
    for (size_t ci = 0; ci < checkpoints.size(); ++ci)
        if (checkpoints[ci] == 0) result[ci] = t.value(cur);
    for (int k = 0; k < cfg_.layers; ++k) {
        cur = layer_apply(t, ps, k, cur, zn, false).out;
        ++depth;
        for (size_t ci = 0; ci < checkpoints.size(); ++ci)
            if (checkpoints[ci] == depth) result[ci] = t.value(cur);
    }
    return result;
}

Partition PriorFlow::partition(int layer_index) const {
    const int D = cfg_.latent_dim;
    Partition p;
    const bool parity_scheme = layer_index % 2 == 0;
    const bool flip = (layer_index / 2) % 2 == 1;
    for (int k = 0; k < D; ++k) {
        const bool in_group_a = parity_scheme ? (k % 2 == 0) : (k < D / 2);
        if (in_group_a != flip)
            p.upd.push_back(k);
        else
            p.cond.push_back(k);
    }
    return p;
}

std::string PriorFlow::key(int layer, const char* name) const {
    return prefix_ + "l" + std::to_string(layer) + "." + name;
}

void PriorFlow::init(ParamStore& ps, Rng& rng) const {
    const int H = cfg_.hidden;
    for (int k = 0; k < cfg_.layers; ++k) {
        const Partition p = partition(k);
        const int nc = static_cast<int>(p.cond.size());
        const int nu = static_cast<int>(p.upd.size());
        ps.add(key(k, "tw1"), init_weight(nc, H, rng));
        ps.add(key(k, "tb1"), Matrix(1, H));
        ps.add(key(k, "tw2"), init_weight(H, H, rng));
        ps.add(key(k, "tb2"), Matrix(1, H));
        ps.add(key(k, "sw"), Matrix(H, nu));
        ps.add(key(k, "sb"), Matrix(1, nu));
        ps.add(key(k, "shw"), Matrix(H, nu));
        ps.add(key(k, "shb"), Matrix(1, nu));
    }
    ps.add(prefix_ + "base_mean", Matrix(1, cfg_.latent_dim));
    ps.add(prefix_ + "base_log_var", Matrix(1, cfg_.latent_dim));
}

FlowResult PriorFlow::layer_apply(Tape& t, ParamStore& ps, int layer, int in,
                                  bool inverse) const {
    const Partition p = partition(layer);
    const int yc = t.gather_cols(in, p.cond);
    const int yu = t.gather_cols(in, p.upd);

    int h = t.activation(linear(t, yc, t.param(ps, key(layer, "tw1")),
                                t.param(ps, key(layer, "tb1"))),
                         Act::Tanh);
    h = t.activation(
        linear(t, h, t.param(ps, key(layer, "tw2")), t.param(ps, key(layer, "tb2"))),
        Act::Tanh);

    const int raw =
        linear(t, h, t.param(ps, key(layer, "sw")), t.param(ps, key(layer, "sb")));
    const int ell = t.scale(t.activation(raw, Act::Tanh), cfg_.log_scale_bound);
    const int shift =
        linear(t, h, t.param(ps, key(layer, "shw")), t.param(ps, key(layer, "shb")));

    int out_u, log_det;
    if (!inverse) {
        out_u = t.add(t.mul(yu, t.exp_(ell)), shift);
        log_det = t.row_sum(ell);
    } else {
        out_u = t.mul(t.sub(yu, shift), t.exp_(t.scale(ell, -1.0)));
        log_det = t.scale(t.row_sum(ell), -1.0);
    }
    return {t.combine_cols(out_u, p.upd, yc, p.cond, cfg_.latent_dim), log_det};
}

FlowResult PriorFlow::layer_generate(Tape& t, ParamStore& ps, int layer, int y) const {
    return layer_apply(t, ps, layer, y, false);
}
FlowResult PriorFlow::layer_normalize(Tape& t, ParamStore& ps, int layer, int x) const {
    return layer_apply(t, ps, layer, x, true);
}

FlowResult PriorFlow::generate(Tape& t, ParamStore& ps, int y) const {
    FlowResult r = layer_apply(t, ps, 0, y, false);
    for (int k = 1; k < cfg_.layers; ++k) {
        FlowResult rk = layer_apply(t, ps, k, r.out, false);
        r = {rk.out, t.add(r.log_det, rk.log_det)};
    }
    return r;
}

FlowResult PriorFlow::normalize(Tape& t, ParamStore& ps, int x) const {
    FlowResult r = layer_apply(t, ps, cfg_.layers - 1, x, true);
    for (int k = cfg_.layers - 2; k >= 0; --k) {
        FlowResult rk = layer_apply(t, ps, k, r.out, true);
        r = {rk.out, t.add(r.log_det, rk.log_det)};
    }
    return r;
}

int PriorFlow::log_prob(Tape& t, ParamStore& ps, int z) const {
    const FlowResult r = normalize(t, ps, z);
    const int base_lp = gaussian_log_prob(t, r.out, t.param(ps, prefix_ + "base_mean"),
                                          t.param(ps, prefix_ + "base_log_var"));
    return t.add(base_lp, r.log_det);
}

Matrix PriorFlow::sample(ParamStore& ps, int m, Rng& rng) const {
    if (m < 1) throw ParamError("prior sample: m must be >= 1");
    Tape t;
    const Matrix& mean = ps.get(prefix_ + "base_mean").value;
    Matrix lv = ps.get(prefix_ + "base_log_var").value;
    for (double& v : lv.data) v = std::clamp(v, kLogVarMin, kLogVarMax);
    Matrix y(m, cfg_.latent_dim);
    for (int i = 0; i < m; ++i)
        for (int k = 0; k < cfg_.latent_dim; ++k)
            y.at(i, k) = mean.at(0, k) + std::exp(0.5 * lv.at(0, k)) * rng.normal();
    return t.value(generate(t, ps, t.constant(std::move(y))).out);
}

}  // namespace dpf
