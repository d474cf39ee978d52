#include "dpf/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dpf {

int linear(Tape& t, int input, int weight, int bias) {
    const Matrix& in = t.value(input);
    const Matrix& w = t.value(weight);
    const Matrix& b = t.value(bias);
    if (in.cols != w.rows || b.rows != 1 || b.cols != w.cols)
        throw DimensionError("linear: input " + in.shape_str() + ", weight " +
                             w.shape_str() + ", bias " + b.shape_str());
    return t.add_row(t.matmul(input, weight), bias);
}

int gaussian_log_prob(Tape& t, int x, int mean, int log_var) {
    const Matrix& vx = t.value(x);
    const int n = vx.rows;
    const int d = vx.cols;
    int m = mean;
    int lv = t.clamp(log_var, kLogVarMin, kLogVarMax);
    if (t.value(m).rows == 1 && n > 1) m = t.tile_rows(m, n);
    if (t.value(lv).rows == 1 && n > 1) lv = t.tile_rows(lv, n);
    check_same_shape(vx, t.value(m), "gaussian_log_prob mean");
    check_same_shape(vx, t.value(lv), "gaussian_log_prob log_var");

    int diff = t.sub(x, m);
    int sq = t.mul(diff, diff);
    int inv_var = t.exp_(t.scale(lv, -1.0));
    int maha = t.mul(sq, inv_var);
    // -0.5 * (ln 2pi + log_var + (x - mu)^2 / var), summed over dims
    int terms = t.scale(t.shift(t.add(lv, maha), kLn2Pi), -0.5);
    (void)d;
    return t.row_sum(terms);
}

int reparam_sample(Tape& t, int mean, int log_var, Rng& rng) {
    const Matrix& vm = t.value(mean);
    check_same_shape(vm, t.value(log_var), "reparam_sample");
    Matrix eps(vm.rows, vm.cols);
    for (double& e : eps.data) e = rng.normal();
    int sigma = t.exp_(t.scale(log_var, 0.5));
    int noise = t.mul(sigma, t.constant(std::move(eps)));
    return t.add(mean, noise);
}

double grad_check(const std::function<double(ParamStore&, bool)>& fn,
                  ParamStore& params, double h, Rng& rng, size_t max_entries) {
    params.zero_grads();
    fn(params, true);

    // Snapshot analytic grads; finite-difference evals must not disturb them.
    std::map<std::string, Matrix> analytic;
    for (auto& [name, e] : params.entries) analytic[name] = e.grad;

    double max_rel = 0.0;
    const size_t total = params.total_entries();
    const bool subsample = total > max_entries;

    for (auto& [name, e] : params.entries) {
        for (size_t i = 0; i < e.value.size(); ++i) {
            if (subsample && rng.uniform() > static_cast<double>(max_entries) / total)
                continue;
            const double orig = e.value.data[i];
            e.value.data[i] = orig + h;
            const double fp = fn(params, false);
            e.value.data[i] = orig - h;
            const double fm = fn(params, false);
            e.value.data[i] = orig;
            const double fd = (fp - fm) / (2.0 * h);
            const double g = analytic[name].data[i];
            // Guarded denominator: near-zero gradients compare absolutely,
            // otherwise relatively.
            const double denom = std::max(std::abs(g) + std::abs(fd), 1.0);
            max_rel = std::max(max_rel, std::abs(g - fd) / denom);
        }
    }
    return max_rel;
}

}  // namespace dpf
