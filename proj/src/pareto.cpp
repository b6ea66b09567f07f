#include "straggler/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace straggler::pareto {

double cdf(const Params& p, double x) {
  if (x < p.beta) return 0.0;
  return 1.0 - std::pow(x / p.beta, -p.alpha);
}

Params fit_mle(std::span<const double> samples) {
  if (samples.size() < 2) throw std::invalid_argument("fit_mle: need at least two samples");
  double lo = samples[0];
  for (double x : samples) {
    if (!(x > 0.0)) throw std::invalid_argument("fit_mle: samples must be positive");
    lo = std::min(lo, x);
  }
  const double q = static_cast<double>(samples.size());
  double log_sum = 0;
  for (double x : samples) log_sum += std::log(x);
  const double denom = log_sum - q * std::log(lo);
  if (!(denom > 0.0)) throw std::invalid_argument("fit_mle: degenerate samples (all equal)");
  return {q / denom, lo};
}

double log_likelihood(std::span<const double> samples, const Params& p) {
  const double q = static_cast<double>(samples.size());
  double log_sum = 0;
  for (double x : samples) log_sum += std::log(x);
  return q * std::log(p.alpha) + q * p.alpha * std::log(p.beta) - (p.alpha + 1.0) * log_sum;
}

double straggler_threshold(const Params& p, double k) {
  if (!(p.alpha > 1.0)) throw std::invalid_argument("straggler_threshold: alpha must exceed 1");
  if (!(k > 0.0)) throw std::invalid_argument("straggler_threshold: k must be positive");
  return k * p.alpha * p.beta / (p.alpha - 1.0);
}

StragglerEstimate expected_stragglers(const Params& p, int q, double k) {
  if (q < 1) throw std::invalid_argument("expected_stragglers: q must be at least 1");
  StragglerEstimate est;
  est.threshold_k_time = straggler_threshold(p, k);
  const double raw = q * std::pow(est.threshold_k_time / p.beta, -p.alpha);
  est.expected = std::clamp(raw, 0.0, static_cast<double>(q));
  est.mitigate_count = std::min(q, static_cast<int>(std::floor(est.expected)));
  return est;
}

std::vector<bool> classify_stragglers(std::span<const double> completion_times, double threshold) {
  std::vector<bool> out;
  out.reserve(completion_times.size());
  for (double t : completion_times) out.push_back(t > threshold);
  return out;
}

Params clamp_for_use(Params p) {
  p.alpha = std::max(p.alpha, 1.0 + 1e-6);
  p.beta = std::max(p.beta, 1e-6);
  return p;
}

}  // namespace straggler::pareto
