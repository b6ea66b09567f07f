#include "straggler/types.hpp"

#include <algorithm>
#include <utility>

namespace straggler {

std::string to_string(TaskState s) {
  switch (s) {
    case TaskState::queued: return "queued";
    case TaskState::running: return "running";
    case TaskState::completed: return "completed";
    case TaskState::speculating: return "speculating";
    case TaskState::rerunning: return "rerunning";
    case TaskState::failed: return "failed";
  }
  return "unknown";
}

const Job& ClusterState::job(JobId id) const {
  auto it = jobs.find(id);
  if (it == jobs.end()) throw SimError("unknown job id " + std::to_string(id));
  return it->second;
}

Job& ClusterState::job(JobId id) {
  return const_cast<Job&>(std::as_const(*this).job(id));
}

const Task& ClusterState::task(TaskId id) const {
  auto it = tasks.find(id);
  if (it == tasks.end()) throw SimError("unknown task id " + std::to_string(id));
  return it->second;
}

Task& ClusterState::task(TaskId id) {
  return const_cast<Task&>(std::as_const(*this).task(id));
}

int ClusterState::online_host_count() const {
  return static_cast<int>(std::count_if(hosts.begin(), hosts.end(), [](const Host& h) { return h.online; }));
}

}  // namespace straggler
