#pragma once

#include <cstdint>
#include <random>

namespace straggler {

using Rng = std::mt19937_64;

// Independent streams derived from one run seed so that adding draws in one
// subsystem never shifts another (workload, faults, scheduler, policies).
enum class Stream : std::uint64_t { workload = 1, faults = 2, scheduler = 3, policy = 4, training = 5 };

Rng make_stream(std::uint64_t seed, Stream stream);

// Uniform in [0, 1) with 53 random bits.
double uniform01(Rng& rng);

// Poisson count by sequential inversion of the CDF.
int sample_poisson(Rng& rng, double lambda);

// Inverse transform of u in [0, 1); u = 0 is resampled since a zero time to failure is meaningless.
double sample_weibull_ttf(Rng& rng, double k, double lambda);
double weibull_from_uniform(double u, double k, double lambda);

int uniform_int(Rng& rng, int lo, int hi);  // inclusive
double uniform_real(Rng& rng, double lo, double hi);
double normal(Rng& rng, double mean, double stddev);

}  // namespace straggler
