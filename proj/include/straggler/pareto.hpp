#pragma once

#include <span>
#include <vector>

namespace straggler::pareto {

struct Params {
  double alpha = 2.0;  // tail index
  double beta = 1.0;   // scale, the smallest observed time

  bool valid() const { return alpha > 1.0 && beta > 0.0; }
};

struct StragglerEstimate {
  double expected = 0;       // E_S
  int mitigate_count = 0;    // floor(E_S), within [0, q]
  double threshold_k_time = 0;
};

double cdf(const Params& p, double x);

// Closed-form maximum likelihood fit. beta is the sample minimum and alpha is
// returned unclamped. Throws std::invalid_argument on fewer than two samples,
// a nonpositive sample, or all samples equal.
Params fit_mle(std::span<const double> samples);

double log_likelihood(std::span<const double> samples, const Params& p);

// K = k * alpha * beta / (alpha - 1), i.e. k times the distribution mean.
double straggler_threshold(const Params& p, double k);

StragglerEstimate expected_stragglers(const Params& p, int q, double k);

std::vector<bool> classify_stragglers(std::span<const double> completion_times, double threshold);

// Keeps params usable downstream of a predictor whose head may emit alpha = 1 or beta = 0.
Params clamp_for_use(Params p);

}  // namespace straggler::pareto
