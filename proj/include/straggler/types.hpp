#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace straggler {

using HostId = std::int32_t;
using TaskId = std::int64_t;
using JobId = std::int64_t;

inline constexpr HostId kNoHost = -1;

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Host {
  HostId id = 0;
  std::string machine_class;
  double cpu_capacity = 0;   // MIPS
  double ram_capacity = 0;   // MB
  double disk_capacity = 0;  // MB
  double bw_capacity = 0;    // KB/s
  double cpu_used = 0;       // allocated MIPS, never above capacity
  double ram_used = 0;
  double disk_used = 0;
  double bw_used = 0;
  double cpu_demand = 0;     // sum of requested MIPS, may exceed capacity
  double cost_per_interval = 0;
  double power_min = 0;
  double power_max = 0;
  int active_task_count = 0;
  bool online = true;
  int downtime_remaining = 0;  // intervals
  bool vm_creation_fault_pending = false;

  bool overloaded() const { return cpu_demand > cpu_capacity; }
  bool fits(double ram, double disk) const {
    return online && ram_used + ram <= ram_capacity && disk_used + disk <= disk_capacity;
  }
};

enum class TaskState { queued, running, completed, speculating, rerunning, failed };

std::string to_string(TaskState s);

// One execution of a task on one host. Speculation and cloning keep two.
struct TaskCopy {
  HostId host = kNoHost;
  double base_progress = 0;  // MI completed at base_time
  double base_time = 0;
  double rate = 0;           // MIPS currently granted
  double started_at = 0;
  std::uint64_t version = 0; // bumps whenever rate or base changes
  std::uint64_t copy_serial = 0;

  double progress_at(double t) const { return base_progress + rate * (t - base_time); }
};

struct Task {
  TaskId id = 0;
  JobId job_id = 0;
  double cpu_req = 0;
  double ram_req = 0;
  double disk_req = 0;
  double bw_req = 0;
  double length = 0;    // MI
  double progress = 0;  // MI, synced on state changes
  double submit_time = 0;
  std::optional<double> start_time;
  std::optional<double> completion_time;
  double restart_time_total = 0;
  std::optional<double> restart_pending_since;
  HostId assigned_host = kNoHost;
  HostId prev_host = kNoHost;
  TaskState state = TaskState::queued;
  std::vector<TaskCopy> copies;
  int delays = 0;
  bool mitigated = false;

  bool finished() const { return state == TaskState::completed || state == TaskState::failed; }
  bool active() const { return !copies.empty(); }
  double nominal_duration() const { return length / cpu_req; }
};

struct Job {
  JobId id = 0;
  std::vector<TaskId> tasks;
  bool deadline_driven = false;
  double submit_time = 0;
  double sla_deadline = 0;  // absolute simulation time
  double sla_weight = 1.0;
  std::optional<double> completion_time;
  int finished_tasks = 0;

  int remaining() const { return static_cast<int>(tasks.size()) - finished_tasks; }
};

struct ClusterState {
  std::vector<Host> hosts;
  std::map<JobId, Job> jobs;
  std::map<TaskId, Task> tasks;
  int interval_index = 0;
  double interval_length = 300.0;
  double now = 0;
  std::vector<double> straggler_ema_per_host;

  const Job& job(JobId id) const;
  const Task& task(TaskId id) const;
  Job& job(JobId id);
  Task& task(TaskId id);
  int online_host_count() const;
};

}  // namespace straggler
