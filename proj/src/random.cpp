#include "straggler/random.hpp"

#include <cmath>
#include <stdexcept>

namespace straggler {

Rng make_stream(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int sample_poisson(Rng& rng, double lambda) {
  if (!(lambda > 0)) throw std::invalid_argument("poisson lambda must be positive");
  const double u = uniform01(rng);
  int k = 0;
  double p = std::exp(-lambda);
  double cdf = p;
  while (u >= cdf) {
    ++k;
    p *= lambda / k;
    cdf += p;
    if (p == 0.0 && cdf < u) break;  // tail underflow; u sits in the last representable bucket
  }
  return k;
}

double weibull_from_uniform(double u, double k, double lambda) {
  return lambda * std::pow(-std::log1p(-u), 1.0 / k);
}

double sample_weibull_ttf(Rng& rng, double k, double lambda) {
  if (!(k > 0 && lambda > 0)) throw std::invalid_argument("weibull parameters must be positive");
  double u = 0;
  do {
    u = uniform01(rng);
  } while (u == 0.0);
  return weibull_from_uniform(u, k, lambda);
}

int uniform_int(Rng& rng, int lo, int hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(span)) % span);
}

double uniform_real(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

double normal(Rng& rng, double mean, double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  return dist(rng);
}

}  // namespace straggler
