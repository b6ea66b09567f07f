#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "straggler/types.hpp"

namespace straggler::metrics {

// Completed task record: completion, submission and restart time.
struct TaskTiming {
  double completion = 0;
  double submission = 0;
  double restart = 0;
};

// Mean response plus the unaveraged restart sum, as the execution-time
// formula is printed. `restart_averaged` divides the restart sum by q too.
double avg_execution_time(std::span<const TaskTiming> tasks, bool restart_averaged = false);

// Sum over overloaded hosts of the CPU requirements placed on them.
double resource_contention(const ClusterState& state);

enum class Resource { cpu, memory, disk, network };

struct MemoryModel {
  double buffer_fraction = 0;
  double cache_fraction = 0;
};

// Instantaneous percentage for one host. Network is bits moved over the
// interval relative to bandwidth x interval; here the host's current
// transfer rate stands in for a full interval at that rate.
double utilization_percent(Resource kind, const Host& host, const MemoryModel& memory = {});
double memory_percent(double total, double used, const MemoryModel& memory);
double network_percent(double kilobytes_moved, double bw_kbps, double interval_seconds);

struct JobOutcome {
  bool violated = false;
  double weight = 1.0;
};

double sla_violation_rate(std::span<const JobOutcome> jobs);

struct MapeResult {
  std::optional<double> value;  // absent when every interval had zero actual stragglers
  int included = 0;
  int excluded = 0;
};

MapeResult mape(std::span<const double> actual, std::span<const double> predicted);

// Standard F1 = tp / (tp + (fp + fn) / 2). `as_printed` evaluates tp / (tp + (fp + tp) / 2).
double f1_score(double tp, double fp, double fn, bool as_printed = false);

// One row of the per-interval series.
struct MetricsSample {
  int interval_index = 0;
  double energy = 0;          // power x seconds
  double power_min_seen = 0;  // lowest per-host instantaneous power during the interval
  double power_max_seen = 0;
  double contention = 0;      // time-averaged
  double cpu_util = 0;        // percent
  double ram_util = 0;
  double disk_util = 0;
  double net_util = 0;
  std::int64_t tasks_completed = 0;
  double response_sum = 0;
  double restart_sum = 0;
  std::int64_t jobs_completed = 0;
  double job_response_sum = 0;
  std::int64_t sla_jobs = 0;
  double sla_violations = 0;  // weighted
  double stragglers_actual = 0;
  double stragglers_predicted = 0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t mitigations = 0;
  std::int64_t tasks_failed = 0;

  bool operator==(const MetricsSample&) const = default;
};

struct MetricsOptions {
  bool f1_as_printed = false;
  bool restart_averaged = false;
};

struct Aggregates {
  int intervals = 0;
  double total_energy = 0;
  double mean_contention = 0;
  std::optional<double> avg_execution_time;
  std::optional<double> mean_job_completion;
  std::optional<double> sla_violation_rate;
  double mean_cpu_util = 0;
  double mean_ram_util = 0;
  double mean_disk_util = 0;
  double mean_net_util = 0;
  std::optional<double> mape;
  int mape_excluded = 0;
  std::optional<double> f1;
  std::int64_t tasks_completed = 0;
  std::int64_t tasks_failed = 0;
  std::int64_t jobs_completed = 0;
  std::int64_t mitigations = 0;

  bool operator==(const Aggregates&) const = default;
};

Aggregates aggregate(std::span<const MetricsSample> series, const MetricsOptions& options);

struct MetricsReport {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string policy;
  MetricsOptions options;
  Aggregates totals;
  std::vector<MetricsSample> series;
};

nlohmann::json aggregates_to_json(const Aggregates& a);
Aggregates aggregates_from_json(const nlohmann::json& j);
nlohmann::json report_to_json(const MetricsReport& report);

// Column order is fixed; see README.
const std::vector<std::string>& series_columns();
void write_series_csv(std::ostream& out, std::span<const MetricsSample> series);
std::vector<MetricsSample> read_series_csv(std::istream& in);

}  // namespace straggler::metrics
