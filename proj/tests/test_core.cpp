#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "straggler/config.hpp"
#include "straggler/random.hpp"
#include "straggler/workload.hpp"

using namespace straggler;

TEST_CASE("empty config yields the table defaults") {
  const SimConfig c = parse_config("");
  CHECK(c == SimConfig{});
  CHECK(c.interval_seconds == 300);
  CHECK(c.workload.poisson_lambda == doctest::Approx(1.2));
  CHECK(c.workload.max_tasks == 10);
  CHECK(c.predictor.k == doctest::Approx(1.5));
  CHECK(c.predictor.observe_interval == 1);
  CHECK(c.predictor.window == 5);
  CHECK(c.predictor.window_steps() == 5);
  CHECK(c.faults.weibull_k == doctest::Approx(1.5));
  CHECK(c.faults.weibull_lambda == doctest::Approx(2.0));
  CHECK(c.energy.e_min == 108);
  CHECK(c.energy.e_max == 273);
}

TEST_CASE("validation names the offending key") {
  try {
    parse_config("sim.interval_seconds = -5\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("sim.interval_seconds") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("sim.bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("no equals sign\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("sim.policy = fastest\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("sim.horizon_intervals = many\n"), ConfigError);
}

TEST_CASE("comments and whitespace are ignored") {
  const SimConfig c = parse_config("# heading\n  sim.seed =  42   # trailing\n\nsim.policy = dolly\n");
  CHECK(c.seed == 42);
  CHECK(c.policy == PolicyId::dolly);
}

TEST_CASE("dump and parse round-trip") {
  SimConfig c;
  c.seed = 99;
  c.scheduler = SchedulerKind::random;
  c.policy = PolicyId::wrangler;
  c.workload.length_scale = 31.25;
  c.fleet.classes[1].mips = 1234.5;
  c.predictor.adapt_k = false;
  c.train.lr = 3e-4;
  c.workload.trace_path = "some/trace.csv";
  const SimConfig back = parse_config(dump_config(c));
  CHECK(back == c);
  CHECK(dump_config(back) == dump_config(c));
}

TEST_CASE("policy and scheduler names round-trip") {
  for (PolicyId p : all_policies()) CHECK(parse_policy(to_string(p)) == p);
  CHECK(all_policies().size() == 6);
  CHECK(parse_scheduler("random") == SchedulerKind::random);
  CHECK(parse_scheduler(to_string(SchedulerKind::least_loaded)) == SchedulerKind::least_loaded);
  CHECK(parse_scheduler("least-loaded") == SchedulerKind::least_loaded);
}

TEST_CASE("poisson sampler matches the pmf at zero and the mean") {
  Rng rng = make_stream(5, Stream::workload);
  const int n = 100000;
  int zeros = 0;
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    const int x = sample_poisson(rng, 1.2);
    zeros += x == 0;
    sum += x;
  }
  CHECK(std::abs(static_cast<double>(zeros) / n - std::exp(-1.2)) < 0.01);
  CHECK(std::abs(sum / n - 1.2) < 0.02);
}

TEST_CASE("weibull inverse transform") {
  CHECK(weibull_from_uniform(1.0 - std::exp(-1.0), 1.5, 2.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(weibull_from_uniform(0.0, 1.5, 2.0) == 0.0);
  Rng rng = make_stream(5, Stream::faults);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = sample_weibull_ttf(rng, 1.5, 2.0);
    REQUIRE(x > 0);
    sum += x;
  }
  const double expected = 2.0 * std::tgamma(1.0 + 1.0 / 1.5);
  CHECK(expected == doctest::Approx(1.8055).epsilon(1e-4));
  CHECK(std::abs(sum / n / expected - 1.0) < 0.02);
}

TEST_CASE("streams are independent and reproducible") {
  Rng a = make_stream(7, Stream::workload);
  Rng b = make_stream(7, Stream::workload);
  Rng c = make_stream(7, Stream::faults);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  Rng u = make_stream(1, Stream::policy);
  for (int i = 0; i < 1000; ++i) {
    const double v = uniform01(u);
    REQUIRE(v >= 0.0);
    REQUIRE(v < 1.0);
    const int k = uniform_int(u, 2, 4);
    REQUIRE(k >= 2);
    REQUIRE(k <= 4);
  }
}

TEST_CASE("trace generation is deterministic and sized by the poisson rate") {
  SimConfig c;
  c.horizon_intervals = 288;
  const Trace t1 = generate_trace(c);
  const Trace t2 = generate_trace(c);
  CHECK(t1 == t2);
  std::ostringstream s1, s2;
  write_trace(s1, t1);
  write_trace(s2, t2);
  CHECK(s1.str() == s2.str());

  std::set<JobId> jobs;
  for (const auto& t : t1) jobs.insert(t.job_id);
  CHECK(std::abs(static_cast<double>(jobs.size()) - 345.6) <= 34.56);

  for (const auto& t : t1) {
    REQUIRE(t.cpu_mips >= c.workload.cpu_min);
    REQUIRE(t.cpu_mips <= c.workload.cpu_max);
    REQUIRE(t.ram_mb >= c.workload.ram_min);
    REQUIRE(t.ram_mb <= c.workload.ram_max);
    REQUIRE(t.length_mi > 0);
    REQUIRE(t.arrival_interval >= 0);
    REQUIRE(t.arrival_interval < c.horizon_intervals);
  }
}

TEST_CASE("jobs have between two and q' tasks") {
  SimConfig c;
  const Trace t = generate_trace(c);
  std::map<JobId, int> sizes;
  for (const auto& x : t) ++sizes[x.job_id];
  for (const auto& [job, n] : sizes) {
    CHECK(n >= c.workload.min_tasks);
    CHECK(n <= c.workload.max_tasks);
  }
}

TEST_CASE("zero-interval horizon gives a header-only trace") {
  SimConfig c;
  c.horizon_intervals = 0;
  const Trace t = generate_trace(c);
  CHECK(t.empty());
  std::ostringstream out;
  write_trace(out, t);
  CHECK(out.str() == std::string(kTraceHeader) + "\n");
}

TEST_CASE("trace csv round-trip") {
  SimConfig c;
  c.horizon_intervals = 6;
  const Trace t = generate_trace(c);
  std::stringstream s;
  write_trace(s, t);
  const Trace back = read_trace(s);
  REQUIRE(back.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(back[i].job_id == t[i].job_id);
    CHECK(back[i].length_mi == t[i].length_mi);
    CHECK(back[i].deadline_driven == t[i].deadline_driven);
  }
  std::istringstream bad("task_id,job_id\n1,2\n");
  CHECK_THROWS(read_trace(bad));
}

TEST_CASE("default fleet splits 12/6/2 across the machine classes") {
  const SimConfig c;
  const auto hosts = build_fleet(c);
  REQUIRE(hosts.size() == 20);
  std::map<std::string, int> per_class;
  for (std::size_t i = 0; i < hosts.size(); ++i) {
    CHECK(hosts[i].id == static_cast<HostId>(i));
    CHECK(hosts[i].online);
    CHECK(hosts[i].power_min == c.energy.e_min);
    CHECK(hosts[i].power_max == c.energy.e_max);
    ++per_class[hosts[i].machine_class];
  }
  CHECK(per_class["core2duo"] == 12);
  CHECK(per_class["i5"] == 6);
  CHECK(per_class["xeon"] == 2);

  SimConfig h;
  h.fleet.homogeneous = true;
  for (const Host& x : build_fleet(h)) CHECK(x.machine_class == "core2duo");
}
