#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <vector>

#include "straggler/config.hpp"
#include "straggler/metrics.hpp"
#include "straggler/mitigation.hpp"
#include "straggler/random.hpp"
#include "straggler/types.hpp"
#include "straggler/workload.hpp"

namespace straggler::sim {

// Declaration order is the tie-break priority at equal times.
enum class EventKind {
  job_arrival,
  interval_boundary,
  task_complete,
  host_fault,
  task_fault,
  vm_creation_fault,
  host_recover,
  mitigation_check,
};

std::string to_string(EventKind k);

struct SimEvent {
  double time = 0;
  EventKind kind = EventKind::interval_boundary;
  std::uint64_t seq = 0;
  std::int64_t a = 0;  // job, task or host id
  std::int64_t b = 0;  // copy serial or observation index
  std::uint64_t version = 0;
};

bool event_before(const SimEvent& x, const SimEvent& y);

// Min-queue on (time, kind, seq); pops are checked to be monotone.
class EventQueue {
 public:
  void push(SimEvent e);
  SimEvent pop();
  const SimEvent& top() const { return heap_.top(); }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const SimEvent& x, const SimEvent& y) const { return event_before(y, x); }
  };
  std::priority_queue<SimEvent, std::vector<SimEvent>, Later> heap_;
  std::uint64_t next_seq_ = 0;
  std::optional<SimEvent> last_;
};

// Instantaneous linear power of one host; offline hosts idle at the minimum.
double host_power(const Host& h);

// Integrals of host usage over the current interval.
struct HostAccumulator {
  double last_time = 0;
  double cpu = 0;  // integral of allocated MIPS
  double ram = 0;
  double disk = 0;
  double bw = 0;
  double contention = 0;
  double power_min_seen = 0;
  double power_max_seen = 0;
  int slow_completions = 0;
  int killed = 0;
};

struct RunStats {
  std::int64_t host_faults = 0;
  std::int64_t task_faults = 0;
  std::int64_t vm_creation_faults = 0;
  std::int64_t restarts = 0;
  std::int64_t ignored_actions = 0;
};

class Simulator {
 public:
  // The policy must outlive the simulator.
  Simulator(SimConfig config, const Trace& trace, mitigation::Policy& policy);
  Simulator(SimConfig config, std::vector<Host> hosts, const Trace& trace, mitigation::Policy& policy);

  // Runs one scheduling interval and returns its metrics row. The last
  // interval of the horizon also fails every unfinished task.
  metrics::MetricsSample advance_interval();
  bool done() const { return state_.interval_index >= config_.horizon_intervals; }
  std::vector<metrics::MetricsSample> run();

  const ClusterState& state() const { return state_; }
  const SimConfig& config() const { return config_; }
  const RunStats& stats() const { return stats_; }
  // Every per-host power level seen so far, lowest and highest.
  double lowest_host_power() const { return lowest_power_; }
  double highest_host_power() const { return highest_power_; }

  // Optional trace of every popped event, for ordering checks.
  std::function<void(const SimEvent&)> on_event;

 private:
  void init_faults();
  void process(const SimEvent& e);
  void handle_arrival(JobId job);
  void handle_boundary();
  void handle_completion(TaskId task, std::int64_t serial, std::uint64_t version);
  void handle_host_fault(HostId host);
  void handle_task_fault(TaskId task, std::int64_t serial);
  void handle_vm_fault(HostId host);
  void handle_recover(HostId host);
  void handle_observe(JobId job);

  void schedule_queue();
  std::optional<HostId> pick_host(const Task& t);
  void start_copy(Task& t, HostId host);
  void kill_copy(Task& t, std::size_t index, bool fault);
  void requeue(Task& t, HostId from);
  void apply(const mitigation::Actions& actions);
  void job_finished(Job& job);

  // Integrates host usage up to now.
  void accumulate(HostId h);
  // Folds elapsed progress of the host's copies into their base.
  void rebase_host(HostId h);
  // New rates after a change of the host's copy set, with fresh completion events.
  void rebalance_host(HostId h);
  void note_power(const Host& h);

  metrics::MetricsSample close_interval(double t_end);
  void finalize_horizon(metrics::MetricsSample& sample);

  Rng entity_rng(std::uint64_t kind, std::uint64_t id, std::uint64_t serial = 0) const;

  SimConfig config_;
  mitigation::Policy& policy_;
  ClusterState state_;
  EventQueue events_;
  std::deque<TaskId> queue_;
  std::vector<HostAccumulator> acc_;
  std::vector<Rng> host_fault_rng_;
  std::vector<Rng> vm_fault_rng_;
  Rng scheduler_rng_;
  metrics::MetricsSample pending_;
  RunStats stats_;
  double lowest_power_ = 0;
  double highest_power_ = 0;
  std::map<TaskId, std::int64_t> copies_started_;
  std::vector<std::vector<TaskId>> host_copies_;
  std::vector<double> observation_offsets_;
};

// Hosts built from the fleet config, trace from resolve_trace.
std::vector<metrics::MetricsSample> simulate(const SimConfig& config, mitigation::Policy& policy);

}  // namespace straggler::sim
