#include <cmath>
#include <memory>
#include <vector>

#include "doctest.h"
#include "straggler/config.hpp"
#include "straggler/mitigation.hpp"
#include "straggler/workload.hpp"

using namespace straggler;
using namespace straggler::mitigation;

namespace {

ClusterState hosts_only(int n, double mips = 1000) {
  ClusterState s;
  for (int i = 0; i < n; ++i) {
    Host h;
    h.id = i;
    h.cpu_capacity = mips;
    h.ram_capacity = 1024;
    h.disk_capacity = 10000;
    h.bw_capacity = 1;
    h.power_min = 108;
    h.power_max = 273;
    s.hosts.push_back(h);
  }
  s.straggler_ema_per_host.assign(static_cast<std::size_t>(n), 0.0);
  return s;
}

// Job 0 with `q` tasks; the first `done` have completed, the rest run on host i % 2.
ClusterState job_state(int q, int done, bool deadline) {
  ClusterState s = hosts_only(4);
  Job job;
  job.id = 0;
  job.deadline_driven = deadline;
  for (int i = 0; i < q; ++i) {
    Task t;
    t.id = i;
    t.cpu_req = 100;
    t.ram_req = 10;
    t.disk_req = 10;
    t.length = 10000;
    t.start_time = 0;
    if (i < done) {
      t.state = TaskState::completed;
      t.completion_time = 100 + 10 * i;
      ++job.finished_tasks;
    } else {
      t.state = TaskState::running;
      t.assigned_host = i % 2;
      TaskCopy c;
      c.host = t.assigned_host;
      c.rate = 100;
      t.copies.push_back(c);
      Host& h = s.hosts[static_cast<std::size_t>(t.assigned_host)];
      h.cpu_used += 100;
      h.cpu_demand += 100;
      h.active_task_count += 1;
    }
    job.tasks.push_back(t.id);
    s.tasks.emplace(t.id, t);
  }
  s.jobs.emplace(0, job);
  return s;
}

}  // namespace

TEST_CASE("node selection by lowest moving average") {
  ClusterState s = hosts_only(3);
  CHECK(select_node(s, kNoHost) == 0);
  s.straggler_ema_per_host = {2.0, 0.1, 0.5};
  CHECK(select_node(s, 1) == 2);
  CHECK(select_node(s, kNoHost) == 1);
  s.hosts[2].online = false;
  CHECK(select_node(s, 1) == 0);
}

TEST_CASE("node selection with no candidate") {
  const ClusterState s = hosts_only(1);
  CHECK_THROWS_AS(select_node(s, 0), NoCandidateHost);
  CHECK_FALSE(try_select_node(s, 0));
}

TEST_CASE("node selection respects the task's requirements") {
  ClusterState s = hosts_only(3);
  Task t;
  t.cpu_req = 600;
  t.ram_req = 100;
  t.disk_req = 10;
  s.hosts[0].cpu_demand = 500;
  s.hosts[1].ram_used = 1000;
  CHECK(select_node(s, kNoHost, &t) == 2);
  CHECK(select_node(s, kNoHost) == 0);
}

TEST_CASE("start speculates the last task of a deadline job") {
  const ClusterState s = job_state(10, 9, true);
  const Actions a = start_actions(s, s.job(0), 1, 0);
  REQUIRE(a.size() == 1);
  CHECK(a[0].kind == ActionKind::speculate);
  CHECK(a[0].task_id == 9);
  CHECK(a[0].target_host != s.task(9).assigned_host);
  CHECK(s.hosts[static_cast<std::size_t>(a[0].target_host)].online);
}

TEST_CASE("start re-runs for jobs without a deadline") {
  const ClusterState s = job_state(10, 9, false);
  const Actions a = start_actions(s, s.job(0), 1, 0);
  REQUIRE(a.size() == 1);
  CHECK(a[0].kind == ActionKind::rerun);
  CHECK(a[0].target_host != s.task(9).assigned_host);
}

TEST_CASE("start waits until only floor(E_S) tasks remain") {
  const ClusterState s = job_state(10, 8, true);
  CHECK(start_actions(s, s.job(0), 1, 0).empty());
  CHECK(start_actions(s, s.job(0), 2, 0).size() == 2);
  CHECK(start_actions(s, s.job(0), 2, 1).size() == 1);
  CHECK(start_actions(s, s.job(0), 0, 0).empty());
  const ClusterState all = job_state(5, 0, true);
  CHECK(start_actions(all, all.job(0), 0, 0).empty());
}

TEST_CASE("start skips tasks already handled") {
  ClusterState s = job_state(4, 3, true);
  s.task(3).mitigated = true;
  CHECK(start_actions(s, s.job(0), 1, 0).empty());
}

TEST_CASE("straggler confusion counts") {
  const std::vector<double> times{100, 101, 102, 103, 104, 105, 106, 107, 108, 2000};
  const Confusion c = straggler_confusion({2, 1}, times, 1.5, 10);
  CHECK(c.tp == 1);
  CHECK(c.fp == 0);
  CHECK(c.fn == 0);
  const Confusion none = straggler_confusion({50, 1}, times, 1.5, 10);
  CHECK(none.tp == 0);
  CHECK(none.fn == 1);
}

TEST_CASE("k adaptation keeps the current value without history") {
  CHECK(adapt_k({}, default_k_grid(), 1.5, 10, false) == 1.5);
  CHECK(default_k_grid().size() == 5);
}

TEST_CASE("k adaptation picks a grid value") {
  std::vector<JobRecord> history;
  for (int j = 0; j < 20; ++j) history.push_back({{2, 1}, {100, 101, 102, 103, 104, 105, 106, 107, 108, 2000.0 + j}});
  const double k = adapt_k(history, default_k_grid(), 1.5, 10, false);
  bool on_grid = false;
  for (double g : default_k_grid()) on_grid |= g == k;
  CHECK(on_grid);
}

TEST_CASE("reactive speculation against the sibling median") {
  ClusterState s = job_state(3, 2, false);
  s.task(0).completion_time = 100;
  s.task(1).completion_time = 120;
  ReactivePolicy p(1.5);
  s.now = 150;
  CHECK(p.check_job(s, s.job(0)).empty());
  s.now = 200;
  const Actions a = p.check_job(s, s.job(0));
  REQUIRE(a.size() == 1);
  CHECK(a[0].kind == ActionKind::speculate);
  CHECK(a[0].task_id == 2);
  CHECK(p.check_job(s, s.job(0)).empty());
}

TEST_CASE("reactive needs two finished siblings") {
  ClusterState s = job_state(3, 1, false);
  s.now = 10000;
  ReactivePolicy p(1.5);
  CHECK(p.check_job(s, s.job(0)).empty());
  ClusterState none = job_state(3, 0, false);
  none.now = 10000;
  CHECK(p.check_job(none, none.job(0)).empty());
}

TEST_CASE("power-law fit recovers the exponent") {
  std::vector<double> x, y;
  for (int i = 1; i <= 20; ++i) {
    x.push_back(i);
    y.push_back(2 + 3 * std::pow(i, 1.5));
  }
  const auto fit = fit_power_law(x, y);
  REQUIRE(fit);
  CHECK(std::abs(fit->c - 1.5) <= 0.05);
  CHECK((*fit)(10.0) == doctest::Approx(2 + 3 * std::pow(10.0, 1.5)).epsilon(0.02));
}

TEST_CASE("power-law fit abstains on too little or flat data") {
  CHECK_FALSE(fit_power_law(std::vector<double>{1, 2}, std::vector<double>{3, 4}));
  CHECK_FALSE(fit_power_law(std::vector<double>{1, 2, 3, 4}, std::vector<double>{7, 7, 7, 7}));
  CHECK_FALSE(fit_power_law(std::vector<double>{5, 5, 5}, std::vector<double>{1, 2, 3}));
}

TEST_CASE("dolly budget and clones") {
  const ClusterState s0 = hosts_only(100, 1000);
  CHECK(dolly_budget(s0.hosts, 0.05, 3600) == doctest::Approx(0.05 * 100 * 1000 * 3600));

  ClusterState s = job_state(2, 0, false);
  DollyPolicy rich(25000);
  const Actions a = rich.on_task_placed(s, s.task(0));
  REQUIRE(a.size() == 1);
  CHECK(a[0].kind == ActionKind::clone);
  CHECK(a[0].target_host != s.task(0).assigned_host);
  CHECK(rich.spent() == 10000);
  CHECK(rich.on_task_placed(s, s.task(0)).empty());
  CHECK(rich.on_task_placed(s, s.task(1)).size() == 1);
  CHECK(rich.spent() == 20000);

  DollyPolicy poor(5000);
  CHECK(poor.on_task_placed(s, s.task(0)).empty());
  CHECK(poor.spent() == 0);
}

TEST_CASE("wrangler delays on confident hosts up to a cap") {
  ClusterState s = hosts_only(3);
  Task t;
  WranglerPolicy w(0.7, 3);
  CHECK_FALSE(w.delay_placement(s, t, 0));
  s.straggler_ema_per_host = {0.9, 1.0, 0.1};
  CHECK(WranglerPolicy::confidence(s, 0) == doctest::Approx(0.9));
  CHECK(w.delay_placement(s, t, 0));
  CHECK_FALSE(w.delay_placement(s, t, 2));
  t.delays = 3;
  CHECK_FALSE(w.delay_placement(s, t, 0));
}

TEST_CASE("policy factory") {
  SimConfig c;
  const auto fleet = build_fleet(c);
  for (PolicyId p : all_policies()) {
    c.policy = p;
    if (p == PolicyId::start) {
      CHECK_THROWS(make_policy(c, fleet, nullptr));
      neural::Shape shape;
      shape.input = feature_width(20, 10);
      const auto net = std::make_shared<neural::Network>(shape, 1);
      CHECK(make_policy(c, fleet, net)->name() == "start");
    } else {
      CHECK(make_policy(c, fleet, nullptr)->name() == to_string(p));
    }
  }
}
