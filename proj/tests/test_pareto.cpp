#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "straggler/pareto.hpp"
#include "straggler/random.hpp"

using namespace straggler;
using namespace straggler::pareto;

namespace {

std::vector<double> draw(std::uint64_t seed, double alpha, double beta, int n) {
  Rng rng = make_stream(seed, Stream::training);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(beta * std::pow(1.0 - uniform01(rng), -1.0 / alpha));
  return out;
}

// Successively finer grids over (1, 5], beta held at the sample minimum.
double grid_argmax(const std::vector<double>& xs) {
  double beta = xs[0];
  for (double x : xs) beta = std::min(beta, x);
  double lo = 1.0 + 1e-9, hi = 5.0;
  double best = lo;
  for (int round = 0; round < 8; ++round) {
    const int steps = 200;
    const double h = (hi - lo) / steps;
    double best_ll = -INFINITY;
    for (int i = 0; i <= steps; ++i) {
      const double a = lo + h * i;
      const double ll = log_likelihood(xs, {a, beta});
      if (ll > best_ll) {
        best_ll = ll;
        best = a;
      }
    }
    lo = std::max(1.0 + 1e-9, best - h);
    hi = std::min(5.0, best + h);
  }
  return best;
}

}  // namespace

TEST_CASE("cdf") {
  CHECK(cdf({2, 1}, 1) == 0.0);
  CHECK(cdf({2, 1}, 2) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(cdf({2, 1}, 0.5) == 0.0);
  CHECK(cdf({3, 2}, 1e9) == doctest::Approx(1.0));
}

TEST_CASE("closed-form fit on [1, 2, 4]") {
  const std::vector<double> xs{1, 2, 4};
  const Params p = fit_mle(xs);
  CHECK(p.beta == 1.0);
  CHECK(p.alpha == doctest::Approx(1.0 / std::log(2.0)).epsilon(1e-12));
  CHECK(p.alpha == doctest::Approx(1.4427).epsilon(1e-4));
}

TEST_CASE("degenerate samples are rejected") {
  CHECK_THROWS_AS(fit_mle(std::vector<double>{1, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(fit_mle(std::vector<double>{3}), std::invalid_argument);
  CHECK_THROWS_AS(fit_mle(std::vector<double>{1, -2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(fit_mle(std::vector<double>{0, 2, 3}), std::invalid_argument);
}

TEST_CASE("fit recovers alpha and agrees with a likelihood grid search") {
  const auto xs = draw(11, 2.0, 1.0, 10000);
  const Params p = fit_mle(xs);
  CHECK(p.alpha >= 1.9);
  CHECK(p.alpha <= 2.1);
  CHECK(std::abs(grid_argmax(xs) - p.alpha) < 1e-6);
}

TEST_CASE("closed form maximises the likelihood") {
  const auto xs = draw(3, 1.5, 5.0, 500);
  const Params p = fit_mle(xs);
  const double best = log_likelihood(xs, p);
  for (double d : {-0.01, 0.01, -0.1, 0.1}) CHECK(log_likelihood(xs, {p.alpha + d, p.beta}) < best);
  CHECK(log_likelihood(xs, {p.alpha, p.beta * 0.99}) < best);
}

TEST_CASE("straggler threshold") {
  CHECK(straggler_threshold({2, 1}, 1.5) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(straggler_threshold({3, 2}, 1.0) == doctest::Approx(3.0 * 2.0 / 2.0).epsilon(1e-15));
  CHECK(straggler_threshold({1001, 1}, 1.5) == doctest::Approx(1.5015).epsilon(1e-6));
}

TEST_CASE("expected stragglers") {
  const auto e = expected_stragglers({2, 1}, 10, 1.5);
  CHECK(std::abs(e.expected - 10.0 / 9.0) < 1e-12);
  CHECK(e.mitigate_count == 1);
  CHECK(e.threshold_k_time == doctest::Approx(3.0));

  const auto small = expected_stragglers({3, 1}, 5, 1.5);
  CHECK(small.expected == doctest::Approx(5.0 * std::pow(2.25, -3.0)).epsilon(1e-12));
  CHECK(small.expected == doctest::Approx(0.439).epsilon(1e-3));
  CHECK(small.mitigate_count == 0);
}

TEST_CASE("expected stragglers is scale free and bounded by q") {
  for (double alpha : {1.01, 1.2, 1.5, 2.0, 3.0, 7.0}) {
    for (int q : {1, 2, 7, 10}) {
      for (double k : {1.0, 1.25, 1.5, 2.0}) {
        const auto a = expected_stragglers({alpha, 1}, q, k);
        const auto b = expected_stragglers({alpha, 250}, q, k);
        CHECK(a.expected == doctest::Approx(b.expected).epsilon(1e-12));
        CHECK(a.expected >= 0.0);
        CHECK(a.expected <= q);
        CHECK(a.mitigate_count == static_cast<int>(std::floor(a.expected)));
        CHECK(a.mitigate_count >= 0);
        CHECK(a.mitigate_count <= q);
      }
    }
  }
}

TEST_CASE("with k = 1.5 and q <= 8 at most zero tasks are ever mitigated") {
  for (double alpha = 1.001; alpha < 50; alpha *= 1.01) CHECK(expected_stragglers({alpha, 1}, 8, 1.5).expected < 1.0);
}

TEST_CASE("classification against K") {
  const std::vector<double> a{1, 2, 3};
  for (bool s : classify_stragglers(a, 3.0)) CHECK_FALSE(s);
  const std::vector<double> b{1, 4};
  CHECK(classify_stragglers(b, 3.0) == std::vector<bool>{false, true});
  CHECK(classify_stragglers(std::vector<double>{}, 3.0).empty());
}

TEST_CASE("clamp keeps head outputs usable") {
  const Params p = clamp_for_use({1.0, 0.0});
  CHECK(p.valid());
  const Params q = clamp_for_use({2.5, 3.0});
  CHECK(q.alpha == 2.5);
  CHECK(q.beta == 3.0);
}
