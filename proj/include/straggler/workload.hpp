#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "straggler/config.hpp"
#include "straggler/random.hpp"
#include "straggler/types.hpp"

namespace straggler {

struct TraceTask {
  TaskId task_id = 0;
  JobId job_id = 0;
  int arrival_interval = 0;
  double cpu_mips = 0;
  double ram_mb = 0;
  double disk_mb = 0;
  double bw_kbps = 0;
  double length_mi = 0;
  bool deadline_driven = false;

  bool operator==(const TraceTask&) const = default;
};

using Trace = std::vector<TraceTask>;

inline constexpr const char* kTraceHeader =
    "task_id,job_id,arrival_interval,cpu_mips,ram_mb,disk_mb,bw_kbps,length_mi,deadline_driven";

// Poisson job arrivals per interval, 2..q' tasks per job, demands uniform in
// the configured ranges, lengths normal around the workload size.
Trace generate_trace(const SimConfig& config);
Trace generate_trace(const SimConfig& config, Rng& rng);

void write_trace(std::ostream& out, const Trace& trace);
void write_trace(const std::filesystem::path& path, const Trace& trace);
Trace read_trace(std::istream& in);
Trace read_trace(const std::filesystem::path& path);

// The trace the simulator runs: ingested from workload.trace_path when set, generated otherwise.
Trace resolve_trace(const SimConfig& config);

// Virtual nodes split across machine classes by largest remainder of their shares.
std::vector<Host> build_fleet(const SimConfig& config);

}  // namespace straggler
