#include <doctest.h>

#include <array>
#include <cmath>

#include "dpf/flow.hpp"

using namespace dpf;

namespace {

PointFlowConfig small_point_cfg(int layers = 6, int D = 8) {
    PointFlowConfig c;
    c.layers = layers;
    c.latent_dim = D;
    c.trunk_hidden = 16;
    c.film_hidden = 16;
    c.base_hidden = 16;
    return c;
}

Matrix random_matrix(int r, int c, Rng& rng, double lo = -2, double hi = 2) {
    Matrix m(r, c);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

}  // namespace

TEST_CASE("partition cycle covers all six partitionings") {
    // three singleton + three pair updated groups over any 6 consecutive
    // layers; each coordinate updated at least twice
    for (int start = 0; start < 12; ++start) {
        int updated[3] = {0, 0, 0};
        for (int k = start; k < start + 6; ++k) {
            const Partition p = point_partition(k);
            CHECK(!p.upd.empty());
            CHECK(!p.cond.empty());
            CHECK(p.upd.size() + p.cond.size() == 3);
            for (int c : p.upd) ++updated[c];
        }
        for (int c = 0; c < 3; ++c) CHECK(updated[c] >= 2);
    }
}

TEST_CASE("coupling_generate: zero-initialized heads give the identity") {
    Rng rng(1);
    const PointFlow flow(small_point_cfg(1));
    ParamStore ps;
    flow.init(ps, rng);
    Tape t;
    const Matrix y = random_matrix(5, 3, rng);
    const int z = t.constant(random_matrix(1, 8, rng));
    const FlowResult r = flow.layer_generate(t, ps, 0, t.leaf(y), z);
    for (size_t i = 0; i < y.size(); ++i) CHECK(t.value(r.out).data[i] == y.data[i]);
    for (double d : t.value(r.log_det).data) CHECK(d == 0.0);
}

TEST_CASE("coupling_generate: single updated dim, l = log 2, t = 1 maps 3 to 7") {
    Rng rng(2);
    PointFlowConfig cfg = small_point_cfg(1);
    const PointFlow flow(cfg);
    ParamStore ps;
    flow.init(ps, rng);
    // layer 0 updates coordinate {0}; force constant l and t via head biases
    // (heads' weights stay zero so y^c has no influence)
    const double raw = std::atanh(std::log(2.0) / cfg.log_scale_bound);
    ps.get("pf.l0.sb").value.at(0, 0) = raw;
    ps.get("pf.l0.shb").value.at(0, 0) = 1.0;
    // kill FiLM influence on the heads: zero the film output layer
    ps.get("pf.l0.fw2").value.fill(0.0);
    // trunk output must also be zeroed so tanh(h) doesn't shift the bias
    ps.get("pf.l0.tw2").value.fill(0.0);
    ps.get("pf.l0.tb2").value.fill(0.0);

    Tape t;
    Matrix y(1, 3);
    y.at(0, 0) = 3.0;
    const int z = t.constant(Matrix(1, 8));
    const FlowResult r = flow.layer_generate(t, ps, 0, t.leaf(y), z);
    CHECK(t.value(r.out).at(0, 0) == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(t.value(r.log_det).at(0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("coupling layers invert exactly, per layer and for the full stack") {
    Rng rng(3);
    const PointFlow flow(small_point_cfg(12));
    ParamStore ps;
    flow.init(ps, rng);
    // modest scale keeps exp(l) amplification from eating the 1e-9 budget
    randomize_params(ps, "pf.", rng, 0.1);

    const Matrix y = random_matrix(7, 3, rng);
    const Matrix z = random_matrix(1, 8, rng, -1, 1);

    // per layer
    for (int k = 0; k < 12; ++k) {
        Tape t;
        const int zn = t.constant(z);
        const FlowResult fwd = flow.layer_generate(t, ps, k, t.leaf(y), zn);
        const FlowResult back = flow.layer_normalize(t, ps, k, fwd.out, zn);
        for (size_t i = 0; i < y.size(); ++i)
            CHECK(std::abs(t.value(back.out).data[i] - y.data[i]) < 1e-9);
        // log_dets are exact negatives
        for (int i = 0; i < 7; ++i)
            CHECK(t.value(fwd.log_det).at(i, 0) == -t.value(back.log_det).at(i, 0));
    }
    // full stack, both compositions
    {
        Tape t;
        const int zn = t.constant(z);
        const FlowResult fwd = flow.generate(t, ps, t.leaf(y), zn);
        const FlowResult back = flow.normalize(t, ps, fwd.out, zn);
        for (size_t i = 0; i < y.size(); ++i)
            CHECK(std::abs(t.value(back.out).data[i] - y.data[i]) < 1e-9);
        // reverse composition re-amplifies by exp(l); tolerance reflects that
        const FlowResult norm = flow.normalize(t, ps, t.leaf(y), zn);
        const FlowResult gen = flow.generate(t, ps, norm.out, zn);
        for (size_t i = 0; i < y.size(); ++i)
            CHECK(std::abs(t.value(gen.out).data[i] - y.data[i]) < 1e-7);
    }
}

TEST_CASE("log_det matches the finite-difference 3x3 Jacobian determinant") {
    Rng rng(4);
    const PointFlow flow(small_point_cfg(6));
    ParamStore ps;
    flow.init(ps, rng);
    randomize_params(ps, "pf.", rng, 0.4);
    const Matrix z = random_matrix(1, 8, rng, -1, 1);

    for (int trial = 0; trial < 5; ++trial) {
        const Matrix y = random_matrix(1, 3, rng);
        Tape t;
        const int zn = t.constant(z);
        const FlowResult r = flow.generate(t, ps, t.leaf(y), zn);
        const double h = 1e-6;
        double jac[3][3];
        for (int j = 0; j < 3; ++j) {
            Matrix yp = y, ym = y;
            yp.at(0, j) += h;
            ym.at(0, j) -= h;
            Tape tp, tm;
            const Matrix op = tp.value(flow.generate(tp, ps, tp.leaf(yp), tp.constant(z)).out);
            const Matrix om = tm.value(flow.generate(tm, ps, tm.leaf(ym), tm.constant(z)).out);
            for (int i = 0; i < 3; ++i) jac[i][j] = (op.at(0, i) - om.at(0, i)) / (2 * h);
        }
        const double det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1]) -
                           jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0]) +
                           jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
        const double analytic = std::exp(t.value(r.log_det).at(0, 0));
        CHECK(std::abs(det - analytic) / analytic < 1e-4);
    }
}

TEST_CASE("conditioning: z changes outputs, y^c never changes x^c") {
    Rng rng(5);
    const PointFlow flow(small_point_cfg(1));
    ParamStore ps;
    flow.init(ps, rng);
    randomize_params(ps, "pf.", rng, 0.5);

    const Matrix y = random_matrix(4, 3, rng);
    const Matrix z1 = random_matrix(1, 8, rng, -1, 1);
    Matrix z2 = z1;
    z2.at(0, 3) += 0.7;

    Tape t;
    const Matrix o1 = t.value(flow.layer_generate(t, ps, 0, t.leaf(y), t.constant(z1)).out);
    const Matrix o2 = t.value(flow.layer_generate(t, ps, 0, t.leaf(y), t.constant(z2)).out);
    double diff = 0;
    for (size_t i = 0; i < o1.size(); ++i) diff += std::abs(o1.data[i] - o2.data[i]);
    CHECK(diff > 1e-8);

    // conditioning coordinates pass through unchanged
    const Partition p = point_partition(0);
    for (int i = 0; i < 4; ++i)
        for (int c : p.cond) CHECK(o1.at(i, c) == y.at(i, c));
}

TEST_CASE("point_log_prob: identity flow equals the standard normal density") {
    Rng rng(6);
    const PointFlow flow(small_point_cfg(6));
    ParamStore ps;
    flow.init(ps, rng);  // zero heads and zero base net: standard normal base
    const Matrix x = random_matrix(5, 3, rng);
    const Matrix z = random_matrix(1, 8, rng, -1, 1);
    Tape t;
    const int lp = flow.log_prob(t, ps, t.leaf(x), t.constant(z));
    for (int i = 0; i < 5; ++i) {
        double expect = -1.5 * kLn2Pi;
        for (int k = 0; k < 3; ++k) expect -= 0.5 * x.at(i, k) * x.at(i, k);
        CHECK(t.value(lp).at(i, 0) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("point_log_prob: affine-only flow matches the closed-form Gaussian") {
    // constant scale/shift per layer (head weights zero, biases set) composes
    // to a diagonal affine map with a closed-form transformed density
    Rng rng(7);
    PointFlowConfig cfg = small_point_cfg(6);
    const PointFlow flow(cfg);
    ParamStore ps;
    flow.init(ps, rng);
    std::array<double, 3> a{1, 1, 1}, b{0, 0, 0};  // generate map x = a*y + b
    for (int k = 0; k < 6; ++k) {
        const Partition p = point_partition(k);
        ps.get("pf.l" + std::to_string(k) + ".fw2").value.fill(0.0);
        ps.get("pf.l" + std::to_string(k) + ".tw2").value.fill(0.0);
        ps.get("pf.l" + std::to_string(k) + ".tb2").value.fill(0.0);
        for (size_t u = 0; u < p.upd.size(); ++u) {
            const double ell = rng.uniform(-0.5, 0.5);
            const double tt = rng.uniform(-0.5, 0.5);
            ps.get("pf.l" + std::to_string(k) + ".sb").value.at(0, static_cast<int>(u)) =
                std::atanh(ell / cfg.log_scale_bound);
            ps.get("pf.l" + std::to_string(k) + ".shb").value.at(0, static_cast<int>(u)) = tt;
            const int c = p.upd[u];
            a[c] *= std::exp(ell);
            b[c] = b[c] * std::exp(ell) + tt;
        }
    }
    const Matrix z = random_matrix(1, 8, rng, -1, 1);
    const Matrix x = random_matrix(4, 3, rng);
    Tape t;
    const int lp = flow.log_prob(t, ps, t.leaf(x), t.constant(z));
    for (int i = 0; i < 4; ++i) {
        // x = a*y + b with y ~ N(0, I)  =>  x ~ N(b, a^2)
        double expect = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double var = a[k] * a[k];
            const double d = x.at(i, k) - b[k];
            expect += -0.5 * (kLn2Pi + std::log(var) + d * d / var);
        }
        CHECK(std::abs(t.value(lp).at(i, 0) - expect) < 1e-8);
    }
}

TEST_CASE("point_sample: identity flow draws a standard normal") {
    Rng rng(8);
    const PointFlow flow(small_point_cfg(6));
    ParamStore ps;
    flow.init(ps, rng);
    const Matrix z = random_matrix(1, 8, rng, -1, 1);
    Rng draw(9);
    const Matrix pts = flow.sample(ps, z, 10000, draw);
    for (int k = 0; k < 3; ++k) {
        double mean = 0;
        for (int i = 0; i < pts.rows; ++i) mean += pts.at(i, k);
        CHECK(std::abs(mean / pts.rows) < 0.05);
    }
}

TEST_CASE("point_sample: log_prob of samples is finite") {
    Rng rng(10);
    const PointFlow flow(small_point_cfg(6));
    ParamStore ps;
    flow.init(ps, rng);
    randomize_params(ps, "pf.", rng, 0.5);
    const Matrix z = random_matrix(1, 8, rng, -1, 1);
    Rng draw(11);
    const Matrix pts = flow.sample(ps, z, 256, draw);
    Tape t;
    const int lp = flow.log_prob(t, ps, t.leaf(pts), t.constant(z));
    for (double v : t.value(lp).data) CHECK(std::isfinite(v));
}

TEST_CASE("prior_log_prob: identity flow equals standard normal on R^D") {
    Rng rng(12);
    PriorFlowConfig cfg;
    cfg.layers = 4;
    cfg.latent_dim = 6;
    cfg.hidden = 16;
    const PriorFlow flow(cfg);
    ParamStore ps;
    flow.init(ps, rng);
    const Matrix z = random_matrix(3, 6, rng);
    Tape t;
    const int lp = flow.log_prob(t, ps, t.leaf(z));
    for (int i = 0; i < 3; ++i) {
        double expect = -3.0 * kLn2Pi;
        for (int k = 0; k < 6; ++k) expect -= 0.5 * z.at(i, k) * z.at(i, k);
        CHECK(t.value(lp).at(i, 0) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("prior flow: finite-difference log-det at D = 4") {
    Rng rng(13);
    PriorFlowConfig cfg;
    cfg.layers = 6;
    cfg.latent_dim = 4;
    cfg.hidden = 16;
    const PriorFlow flow(cfg);
    ParamStore ps;
    flow.init(ps, rng);
    randomize_params(ps, "prior.", rng, 0.4);
    const Matrix z = random_matrix(1, 4, rng);

    Tape t;
    const FlowResult r = flow.generate(t, ps, t.leaf(z));
    const double h = 1e-6;
    double jac[4][4];
    for (int j = 0; j < 4; ++j) {
        Matrix zp = z, zm = z;
        zp.at(0, j) += h;
        zm.at(0, j) -= h;
        Tape tp, tm;
        const Matrix op = tp.value(flow.generate(tp, ps, tp.leaf(zp)).out);
        const Matrix om = tm.value(flow.generate(tm, ps, tm.leaf(zm)).out);
        for (int i = 0; i < 4; ++i) jac[i][j] = (op.at(0, i) - om.at(0, i)) / (2 * h);
    }
    // 4x4 determinant by cofactor expansion
    auto det3 = [](double m[3][3]) {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    double det = 0.0;
    for (int c = 0; c < 4; ++c) {
        double minor[3][3];
        for (int i = 1; i < 4; ++i) {
            int cc = 0;
            for (int j = 0; j < 4; ++j) {
                if (j == c) continue;
                minor[i - 1][cc++] = jac[i][j];
            }
        }
        det += (c % 2 == 0 ? 1.0 : -1.0) * jac[0][c] * det3(minor);
    }
    const double analytic = std::exp(t.value(r.log_det).at(0, 0));
    CHECK(std::abs(std::abs(det) - analytic) / analytic < 1e-4);
}

TEST_CASE("prior flow: round-trip sample to log_prob is finite; partitions alternate") {
    Rng rng(14);
    PriorFlowConfig cfg;
    cfg.layers = 14;
    cfg.latent_dim = 8;
    cfg.hidden = 16;
    const PriorFlow flow(cfg);
    ParamStore ps;
    flow.init(ps, rng);
    randomize_params(ps, "prior.", rng, 0.3);
    Rng draw(15);
    const Matrix z = flow.sample(ps, 5, draw);
    Tape t;
    const int lp = flow.log_prob(t, ps, t.leaf(z));
    for (double v : t.value(lp).data) CHECK(std::isfinite(v));

    // even layers split by parity, odd layers by halves
    const Partition p0 = flow.partition(0);
    for (int c : p0.upd) CHECK(c % 2 == 0);
    const Partition p1 = flow.partition(1);
    for (int c : p1.upd) CHECK(c < 4);
    // the updated side flips across the cycle
    const Partition p2 = flow.partition(2);
    for (int c : p2.upd) CHECK(c % 2 == 1);
}

TEST_CASE("prior_sample: identity flow has identity covariance") {
    Rng rng(16);
    PriorFlowConfig cfg;
    cfg.layers = 4;
    cfg.latent_dim = 4;
    cfg.hidden = 8;
    const PriorFlow flow(cfg);
    ParamStore ps;
    flow.init(ps, rng);
    Rng draw(17);
    const Matrix z = flow.sample(ps, 100000, draw);
    for (int a = 0; a < 4; ++a)
        for (int b = a; b < 4; ++b) {
            double cov = 0;
            for (int i = 0; i < z.rows; ++i) cov += z.at(i, a) * z.at(i, b);
            cov /= z.rows;
            CHECK(std::abs(cov - (a == b ? 1.0 : 0.0)) < 0.05);
        }
}

TEST_CASE("prior_sample: deterministic under a fixed seed") {
    Rng rng(18);
    PriorFlowConfig cfg;
    cfg.layers = 4;
    cfg.latent_dim = 4;
    cfg.hidden = 8;
    const PriorFlow flow(cfg);
    ParamStore ps;
    flow.init(ps, rng);
    randomize_params(ps, "prior.", rng, 0.3);
    Rng d1(19), d2(19);
    const Matrix a = flow.sample(ps, 8, d1), b = flow.sample(ps, 8, d2);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a.data[i] == b.data[i]);
}

TEST_CASE("flow_trace: endpoints match the base draw and point_sample") {
    Rng rng(20);
    const PointFlow flow(small_point_cfg(6));
    ParamStore ps;
    flow.init(ps, rng);
    randomize_params(ps, "pf.", rng, 0.4);
    const Matrix z = random_matrix(1, 8, rng, -1, 1);

    Rng d1(21), d2(21);
    const auto traced = flow.trace(ps, z, 64, {0, 3, 6}, d1);
    const Matrix direct = flow.sample(ps, z, 64, d2);
    REQUIRE(traced.size() == 3);
    for (size_t i = 0; i < direct.size(); ++i)
        CHECK(traced[2].data[i] == direct.data[i]);

    // applying layers 3..5 to the mid checkpoint reproduces the final cloud
    Tape t;
    int cur = t.constant(traced[1]);
    const int zn = t.constant(z);
    for (int k = 3; k < 6; ++k) cur = flow.layer_generate(t, ps, k, cur, zn).out;
    for (size_t i = 0; i < direct.size(); ++i)
        CHECK(std::abs(t.value(cur).data[i] - traced[2].data[i]) < 1e-12);
}

TEST_CASE("flow_trace: out-of-range checkpoint rejected") {
    Rng rng(22);
    const PointFlow flow(small_point_cfg(6));
    ParamStore ps;
    flow.init(ps, rng);
    Rng d(0);
    CHECK_THROWS_AS(flow.trace(ps, Matrix(1, 8), 4, {7}, d), ParamError);
}

TEST_CASE("gradient of mean point_log_prob passes the grad_check contract") {
    Rng rng(23);
    const PointFlow flow(small_point_cfg(3, 4));
    ParamStore ps;
    flow.init(ps, rng);
    randomize_params(ps, "pf.", rng, 0.3);
    const Matrix x = random_matrix(6, 3, rng);
    const Matrix z = random_matrix(1, 4, rng, -1, 1);
    auto fn = [&](ParamStore& p, bool record) {
        Tape t;
        const int lp = flow.log_prob(t, p, t.constant(x), t.constant(z));
        const int out = t.scale(t.sum(lp), 1.0 / 6.0);
        if (record) t.backward(out);
        return t.value(out).at(0, 0);
    };
    Rng sub(0);
    CHECK(grad_check(fn, ps, 1e-5, sub) < 1e-4);
}
