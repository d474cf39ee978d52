#include <doctest.h>

#include <cmath>

#include "dpf/flow.hpp"
#include "dpf/ops.hpp"

using namespace dpf;

TEST_CASE("linear: identity weight") {
    Tape t;
    const int in = t.leaf(Matrix::from_rows({{1, 2}}));
    const int w = t.leaf(Matrix::from_rows({{1, 0}, {0, 1}}));
    const int b = t.leaf(Matrix(1, 2));
    const int out = linear(t, in, w, b);
    CHECK(t.value(out).at(0, 0) == doctest::Approx(1.0));
    CHECK(t.value(out).at(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("linear: 1*2 + 1*3 + 1") {
    Tape t;
    const int in = t.leaf(Matrix::from_rows({{1, 1}}));
    const int w = t.leaf(Matrix::from_rows({{2}, {3}}));
    Matrix bias(1, 1);
    bias.at(0, 0) = 1.0;
    const int out = linear(t, in, w, t.leaf(bias));
    CHECK(t.value(out).at(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("linear: shape mismatch names both shapes") {
    Tape t;
    const int in = t.leaf(Matrix(2, 3));
    const int w = t.leaf(Matrix(4, 5));
    const int b = t.leaf(Matrix(1, 5));
    CHECK_THROWS_WITH_AS(linear(t, in, w, b),
                         doctest::Contains("2x3"), DimensionError);
}

TEST_CASE("linear: gradient of sum(output) wrt weight is columnwise input sums") {
    Rng rng(7);
    Matrix in(4, 3);
    for (double& x : in.data) x = rng.uniform(-2, 2);
    ParamStore ps;
    ps.add("w", init_weight(3, 2, rng));
    ps.add("b", Matrix(1, 2));

    auto fn = [&](ParamStore& p, bool record) {
        Tape t;
        const int out = t.sum(linear(t, t.constant(in), t.param(p, "w"), t.param(p, "b")));
        if (record) t.backward(out);
        return t.value(out).at(0, 0);
    };
    Rng sub(0);
    CHECK(grad_check(fn, ps, 1e-6, sub) < 1e-6);

    // analytic value: dW[i][j] = sum_n in[n][i]
    ps.zero_grads();
    fn(ps, true);
    for (int i = 0; i < 3; ++i) {
        double col = 0;
        for (int n = 0; n < 4; ++n) col += in.at(n, i);
        for (int j = 0; j < 2; ++j)
            CHECK(ps.get("w").grad.at(i, j) == doctest::Approx(col).epsilon(1e-12));
    }
}

TEST_CASE("activation: relu and tanh basics") {
    Tape t;
    const int r = t.activation(t.leaf(Matrix::from_rows({{-1, 2}})), Act::Relu);
    CHECK(t.value(r).at(0, 0) == 0.0);
    CHECK(t.value(r).at(0, 1) == 2.0);
    const int th = t.activation(t.leaf(Matrix::from_rows({{0}})), Act::Tanh);
    CHECK(t.value(th).at(0, 0) == 0.0);
}

TEST_CASE("activation: softplus gradient at 0 is 0.5") {
    ParamStore ps;
    ps.add("x", Matrix(1, 1));
    auto fn = [&](ParamStore& p, bool record) {
        Tape t;
        const int out = t.sum(t.activation(t.param(p, "x"), Act::Softplus));
        if (record) t.backward(out);
        return t.value(out).at(0, 0);
    };
    ps.zero_grads();
    fn(ps, true);
    CHECK(ps.get("x").grad.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    Rng sub(0);
    CHECK(grad_check(fn, ps, 1e-6, sub) < 1e-8);
}

TEST_CASE("gaussian_log_prob: standard normal at mode and at 1") {
    Tape t;
    const int zero = t.leaf(Matrix(1, 1));
    const int lp0 = gaussian_log_prob(t, zero, t.leaf(Matrix(1, 1)), t.leaf(Matrix(1, 1)));
    CHECK(t.value(lp0).at(0, 0) == doctest::Approx(-0.9189385).epsilon(1e-6));

    Matrix one(1, 1);
    one.at(0, 0) = 1.0;
    Tape t2;
    const int lp1 = gaussian_log_prob(t2, t2.leaf(one), t2.leaf(Matrix(1, 1)),
                                      t2.leaf(Matrix(1, 1)));
    CHECK(t2.value(lp1).at(0, 0) == doctest::Approx(-0.9189385 - 0.5).epsilon(1e-6));
}

TEST_CASE("gaussian_log_prob: batched 3-D equals per-dimension summation oracle") {
    Rng rng(11);
    const int n = 5, d = 3;
    Matrix x(n, d), mean(1, d), log_var(1, d);
    for (double& v : x.data) v = rng.uniform(-2, 2);
    for (double& v : mean.data) v = rng.uniform(-1, 1);
    for (double& v : log_var.data) v = rng.uniform(-1, 1);

    Tape t;
    const int lp = gaussian_log_prob(t, t.leaf(x), t.leaf(mean), t.leaf(log_var));
    for (int i = 0; i < n; ++i) {
        double expect = 0.0;
        for (int k = 0; k < d; ++k) {
            const double diff = x.at(i, k) - mean.at(0, k);
            expect += -0.5 * (kLn2Pi + log_var.at(0, k) +
                              diff * diff / std::exp(log_var.at(0, k)));
        }
        CHECK(std::abs(t.value(lp).at(i, 0) - expect) < 1e-12);
    }
}

TEST_CASE("gaussian_log_prob: out-of-range log_var clamps with a counter") {
    Matrix lv(1, 1);
    lv.at(0, 0) = 40.0;
    Tape t;
    gaussian_log_prob(t, t.leaf(Matrix(1, 1)), t.leaf(Matrix(1, 1)), t.leaf(lv));
    CHECK(t.clamp_events() == 1);
}

TEST_CASE("reparam_sample: degenerate variance returns the mean") {
    Matrix mean(3, 2), lv(3, 2, -60.0);
    mean.fill(1.5);
    Rng rng(3);
    Tape t;
    const int s = reparam_sample(t, t.leaf(mean), t.leaf(lv), rng);
    for (double v : t.value(s).data) CHECK(std::abs(v - 1.5) < 1e-9);
}

TEST_CASE("reparam_sample: fixed seed repeats bit-identically") {
    Matrix mean(4, 3), lv(4, 3);
    auto draw = [&] {
        Rng rng(99);
        Tape t;
        return t.value(reparam_sample(t, t.leaf(mean), t.leaf(lv), rng));
    };
    const Matrix a = draw(), b = draw();
    for (size_t i = 0; i < a.size(); ++i) CHECK(a.data[i] == b.data[i]);
}

TEST_CASE("reparam_sample: empirical mean of 1e5 draws") {
    Matrix mean(1, 1), lv(1, 1);
    mean.at(0, 0) = 2.0;
    Rng rng(5);
    double sum = 0.0;
    const int trials = 100000;
    Tape t;
    const int mnode = t.leaf(mean), lnode = t.leaf(lv);
    for (int i = 0; i < trials; ++i) {
        Tape ti;
        sum += ti.value(reparam_sample(ti, ti.leaf(mean), ti.leaf(lv), rng)).at(0, 0);
    }
    (void)mnode;
    (void)lnode;
    CHECK(std::abs(sum / trials - 2.0) < 0.02);
}

TEST_CASE("reparam_sample: gradient flows to mean and log_var") {
    ParamStore ps;
    ps.add("mean", Matrix(2, 2));
    Matrix lv0(2, 2, 0.3);
    ps.add("log_var", lv0);
    auto fn = [&](ParamStore& p, bool record) {
        Rng rng(21);  // same noise each call
        Tape t;
        const int s = reparam_sample(t, t.param(p, "mean"), t.param(p, "log_var"), rng);
        const int out = t.sum(t.mul(s, s));
        if (record) t.backward(out);
        return t.value(out).at(0, 0);
    };
    Rng sub(0);
    CHECK(grad_check(fn, ps, 1e-5, sub) < 1e-4);
}

TEST_CASE("grad_check: quadratic at x=3 gives analytic 6") {
    ParamStore ps;
    Matrix x(1, 1);
    x.at(0, 0) = 3.0;
    ps.add("x", x);
    auto fn = [&](ParamStore& p, bool record) {
        Tape t;
        const int xn = t.param(p, "x");
        const int out = t.sum(t.mul(xn, xn));
        if (record) t.backward(out);
        return t.value(out).at(0, 0);
    };
    ps.zero_grads();
    fn(ps, true);
    CHECK(ps.get("x").grad.at(0, 0) == doctest::Approx(6.0).epsilon(1e-12));
    Rng sub(0);
    CHECK(grad_check(fn, ps, 1e-6, sub) < 1e-8);
}

TEST_CASE("grad_check: linear function has error at machine-epsilon scale") {
    ParamStore ps;
    Matrix x(2, 2);
    x.data = {0.5, -1.0, 2.0, 0.25};
    ps.add("x", x);
    auto fn = [&](ParamStore& p, bool record) {
        Tape t;
        const int out = t.sum(t.scale(t.param(p, "x"), 3.0));
        if (record) t.backward(out);
        return t.value(out).at(0, 0);
    };
    Rng sub(0);
    CHECK(grad_check(fn, ps, 1e-6, sub) < 1e-9);
}

TEST_CASE("invariant: random op pipeline passes finite differences at 1e-4") {
    Rng rng(17);
    ParamStore ps;
    Matrix a(3, 4), b(4, 2), c(1, 2);
    for (double& v : a.data) v = rng.uniform(-2, 2);
    for (double& v : b.data) v = rng.uniform(-2, 2);
    for (double& v : c.data) v = rng.uniform(-2, 2);
    ps.add("a", a);
    ps.add("b", b);
    ps.add("c", c);
    auto fn = [&](ParamStore& p, bool record) {
        Tape t;
        int h = linear(t, t.param(p, "a"), t.param(p, "b"), t.param(p, "c"));
        h = t.activation(h, Act::Tanh);
        h = t.mul(h, t.exp_(t.scale(h, 0.5)));
        h = t.add(t.row_sum(h), t.row_sum(t.activation(h, Act::Softplus)));
        const int out = t.sum(h);
        if (record) t.backward(out);
        return t.value(out).at(0, 0);
    };
    Rng sub(0);
    CHECK(grad_check(fn, ps, 1e-5, sub) < 1e-4);
}

TEST_CASE("invariant: same seed yields bit-identical rng stream") {
    Rng a(12345), b(12345);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.next_u64() == b.next_u64());
        CHECK(a.normal() == b.normal());
    }
}

TEST_CASE("invariant: linear composition equals composed weights") {
    Rng rng(23);
    Matrix x(3, 3), a(3, 3), b(3, 3);
    for (double& v : x.data) v = rng.uniform(-2, 2);
    for (double& v : a.data) v = rng.uniform(-2, 2);
    for (double& v : b.data) v = rng.uniform(-2, 2);
    Tape t;
    const int zero = t.leaf(Matrix(1, 3));
    const int composed =
        linear(t, linear(t, t.leaf(x), t.leaf(a), zero), t.leaf(b), zero);
    const int direct = linear(t, t.leaf(x), t.leaf(matmul(a, b)), zero);
    for (size_t i = 0; i < t.value(direct).size(); ++i)
        CHECK(std::abs(t.value(composed).data[i] - t.value(direct).data[i]) < 1e-10);
}
