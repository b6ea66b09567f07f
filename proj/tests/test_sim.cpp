#include <filesystem>
#include <memory>
#include <vector>

#include "doctest.h"
#include "straggler/config.hpp"
#include "straggler/mitigation.hpp"
#include "straggler/run.hpp"
#include "straggler/sim.hpp"
#include "straggler/workload.hpp"

using namespace straggler;
using namespace straggler::sim;

namespace {

SimConfig load(const char* name) {
  return load_config(std::filesystem::path(STRAGGLER_SOURCE_DIR) / "configs" / name);
}

TraceTask row(TaskId id, JobId job, int interval, double cpu, double length) {
  TraceTask t;
  t.task_id = id;
  t.job_id = job;
  t.arrival_interval = interval;
  t.cpu_mips = cpu;
  t.ram_mb = 64;
  t.disk_mb = 100;
  t.bw_kbps = 0.1;
  t.length_mi = length;
  return t;
}

}  // namespace

TEST_CASE("events order by time, then kind, then insertion") {
  EventQueue q;
  q.push({5.0, EventKind::mitigation_check, 0, 1});
  q.push({5.0, EventKind::job_arrival, 0, 2});
  q.push({1.0, EventKind::host_recover, 0, 3});
  q.push({5.0, EventKind::job_arrival, 0, 4});
  q.push({5.0, EventKind::task_complete, 0, 5});
  std::vector<std::int64_t> order;
  while (!q.empty()) order.push_back(q.pop().a);
  CHECK(order == std::vector<std::int64_t>{3, 2, 4, 5, 1});
}

TEST_CASE("the queue refuses events in the past") {
  EventQueue q;
  q.push({10.0, EventKind::interval_boundary});
  q.pop();
  CHECK_THROWS_AS(q.push({9.0, EventKind::interval_boundary}), SimError);
  q.push({10.0, EventKind::task_complete});
  CHECK_NOTHROW(q.pop());
  CHECK_THROWS_AS(q.pop(), SimError);
}

TEST_CASE("linear power model") {
  Host h;
  h.cpu_capacity = 1000;
  h.power_min = 108;
  h.power_max = 273;
  CHECK(host_power(h) == 108);
  h.cpu_used = 500;
  CHECK(host_power(h) == 190.5);
  h.cpu_used = 1000;
  CHECK(host_power(h) == 273);
  h.online = false;
  CHECK(host_power(h) == 108);
}

TEST_CASE("hand-built two host scenario") {
  SimConfig c;
  c.horizon_intervals = 2;
  c.faults.enabled = false;
  c.fleet.n_hosts = 2;
  c.fleet.homogeneous = true;
  auto hosts = build_fleet(c);
  hosts[0].cpu_capacity = 100;
  hosts[1].cpu_capacity = 200;
  const Trace trace{row(0, 0, 0, 200, 30000), row(1, 0, 0, 200, 30000)};
  mitigation::NonePolicy none;
  Simulator sim(c, hosts, trace, none);
  const auto series = sim.run();
  CHECK(sim.state().task(0).assigned_host == 0);
  CHECK(sim.state().task(1).assigned_host == 1);
  CHECK(*sim.state().task(0).completion_time == doctest::Approx(300));
  CHECK(*sim.state().task(1).completion_time == doctest::Approx(150));
  CHECK(*sim.state().job(0).completion_time == doctest::Approx(300));
  REQUIRE(series.size() == 2);
  CHECK(series[0].tasks_completed + series[1].tasks_completed == 2);
  CHECK(series[0].response_sum + series[1].response_sum == doctest::Approx(450));
}

TEST_CASE("a host shared by two tasks splits its capacity") {
  SimConfig c;
  c.horizon_intervals = 2;
  c.faults.enabled = false;
  c.fleet.n_hosts = 1;
  c.fleet.homogeneous = true;
  auto hosts = build_fleet(c);
  hosts[0].cpu_capacity = 100;
  const Trace trace{row(0, 0, 0, 100, 30000), row(1, 0, 0, 100, 15000)};
  mitigation::NonePolicy none;
  Simulator sim(c, hosts, trace, none);
  sim.run();
  CHECK(*sim.state().task(1).completion_time == doctest::Approx(300));
  CHECK(*sim.state().task(0).completion_time == doctest::Approx(450));
}

TEST_CASE("idle fleet burns exactly the minimum power") {
  SimConfig c;
  c.faults.enabled = false;
  mitigation::NonePolicy none;
  Simulator sim(c, Trace{}, none);
  const auto series = sim.run();
  REQUIRE(series.size() == 48);
  double total = 0;
  for (const auto& s : series) {
    CHECK(s.energy == 20 * 108.0 * 300);
    total += s.energy;
  }
  CHECK(total == 20 * 108.0 * 48 * 300);
}

TEST_CASE("per-host power stays inside the configured range") {
  const SimConfig c = load("straggler_heavy.conf");
  mitigation::NonePolicy none;
  Simulator sim(c, resolve_trace(c), none);
  for (const auto& s : sim.run()) {
    CHECK(s.power_min_seen >= c.energy.e_min);
    CHECK(s.power_max_seen <= c.energy.e_max);
  }
  CHECK(sim.lowest_host_power() >= c.energy.e_min);
  CHECK(sim.highest_host_power() <= c.energy.e_max);
  CHECK(sim.highest_host_power() > c.energy.e_min);
}

TEST_CASE("popped events never go back in time") {
  const SimConfig c = load("straggler_heavy.conf");
  mitigation::ReactivePolicy reactive(1.5);
  Simulator sim(c, resolve_trace(c), reactive);
  std::vector<SimEvent> seen;
  sim.on_event = [&](const SimEvent& e) { seen.push_back(e); };
  sim.run();
  REQUIRE(seen.size() > 100);
  for (std::size_t i = 1; i < seen.size(); ++i) REQUIRE_FALSE(event_before(seen[i], seen[i - 1]));
}

TEST_CASE("same seed gives the same series and fault timeline") {
  const SimConfig c = load("desk.conf");
  mitigation::NonePolicy a, b;
  Simulator x(c, resolve_trace(c), a);
  Simulator y(c, resolve_trace(c), b);
  CHECK(x.run() == y.run());
  CHECK(x.stats().host_faults == y.stats().host_faults);
  CHECK(x.stats().task_faults == y.stats().task_faults);
  CHECK(x.stats().restarts == y.stats().restarts);
  CHECK(x.stats().host_faults > 0);

  SimConfig other = c;
  other.seed = c.seed + 1;
  mitigation::NonePolicy d;
  Simulator z(other, resolve_trace(other), d);
  CHECK_FALSE(z.run() == x.run());
}

TEST_CASE("every task ends completed or failed with one recorded result") {
  for (PolicyId p : all_policies()) {
    if (p == PolicyId::start) continue;
    SimConfig c = load("straggler_heavy.conf");
    c.policy = p;
    const auto trace = resolve_trace(c);
    auto policy = mitigation::make_policy(c, build_fleet(c), nullptr);
    Simulator sim(c, trace, *policy);
    const auto series = sim.run();
    const auto a = metrics::aggregate(series, {});
    std::int64_t completed = 0, failed = 0;
    for (const auto& [id, t] : sim.state().tasks) {
      CHECK(t.finished());
      CHECK(t.copies.empty());
      completed += t.state == TaskState::completed;
      failed += t.state == TaskState::failed;
    }
    CHECK(completed == a.tasks_completed);
    CHECK(failed == a.tasks_failed);
    CHECK(completed + failed == static_cast<std::int64_t>(trace.size()));
    for (const Host& h : sim.state().hosts) {
      CHECK(h.cpu_used <= h.cpu_capacity + 1e-9);
      CHECK(h.ram_used <= h.ram_capacity + 1e-9);
    }
  }
}

TEST_CASE("no-op scenario: start and none agree") {
  SimConfig c = load("noop.conf");
  neural::Shape shape = network_shape(c);
  const auto net = std::make_shared<neural::Network>(shape, 5);
  c.policy = PolicyId::none;
  const auto none = run_simulation(c, net);
  c.policy = PolicyId::start;
  const auto start = run_simulation(c, net);
  CHECK(start.report.totals.mitigations == 0);
  CHECK(start.report.totals.total_energy == none.report.totals.total_energy);
  CHECK(start.report.totals.avg_execution_time == none.report.totals.avg_execution_time);
  CHECK(start.report.totals.mean_job_completion == none.report.totals.mean_job_completion);
  CHECK(start.report.totals.sla_violation_rate == none.report.totals.sla_violation_rate);
  CHECK(start.report.totals.mean_contention == none.report.totals.mean_contention);
}

TEST_CASE("a one interval horizon reports one row") {
  SimConfig c = load("desk.conf");
  c.horizon_intervals = 1;
  mitigation::NonePolicy none;
  CHECK(simulate(c, none).size() == 1);
}
