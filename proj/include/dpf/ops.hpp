// Differentiable building blocks on top of the tape: affine layers,
// diagonal Gaussian log-densities, reparameterized sampling, and a
// finite-difference gradient checker.
#pragma once

#include <functional>

#include "dpf/rng.hpp"
#include "dpf/tape.hpp"

namespace dpf {

inline constexpr double kLogVarMin = -14.0;
inline constexpr double kLogVarMax = 14.0;
inline constexpr double kLn2Pi = 1.8378770664093454835606594728112;

// input[n x a] * weight[a x b] + bias[1 x b] broadcast per row.
int linear(Tape& t, int input, int weight, int bias);

// Per-row log N(x; mean, diag exp(log_var)). mean / log_var may be 1 x d and
// broadcast over the n rows of x. log_var is clamped to [-14, 14].
int gaussian_log_prob(Tape& t, int x, int mean, int log_var);

// mean + exp(0.5 log_var) * eps, eps ~ N(0, I); gradient flows to mean and
// log_var only.
int reparam_sample(Tape& t, int mean, int log_var, Rng& rng);

// Central-difference check of d(fn)/d(params) against tape gradients.
// fn must populate grads when record is true and be deterministic across
// calls. Entries are subsampled above `max_entries` using `rng`.
// Returns the max relative error over checked entries.
double grad_check(const std::function<double(ParamStore&, bool record)>& fn,
                  ParamStore& params, double h, Rng& rng,
                  size_t max_entries = 10000);

}  // namespace dpf
