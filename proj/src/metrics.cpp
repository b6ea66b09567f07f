#include "straggler/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace straggler::metrics {

double avg_execution_time(std::span<const TaskTiming> tasks, bool restart_averaged) {
  if (tasks.empty()) throw std::invalid_argument("avg_execution_time: no completed tasks");
  double response = 0;
  double restart = 0;
  for (const auto& t : tasks) {
    response += t.completion - t.submission;
    restart += t.restart;
  }
  const double q = static_cast<double>(tasks.size());
  return response / q + (restart_averaged ? restart / q : restart);
}

double resource_contention(const ClusterState& state) {
  double total = 0;
  for (const Host& h : state.hosts)
    if (h.overloaded()) total += h.cpu_demand;
  return total;
}

double memory_percent(double total, double used, const MemoryModel& memory) {
  if (!(total > 0)) throw std::invalid_argument("memory_percent: capacity must be positive");
  const double free = total - used;
  const double buffer = memory.buffer_fraction * total;
  const double cache = memory.cache_fraction * total;
  return std::clamp((total - (free + buffer + cache)) / total * 100.0, 0.0, 100.0);
}

double network_percent(double kilobytes_moved, double bw_kbps, double interval_seconds) {
  if (!(bw_kbps > 0 && interval_seconds > 0)) throw std::invalid_argument("network_percent: bad capacity");
  // rx + tx bits over bandwidth x interval; the 8 bits/byte factor cancels.
  return std::clamp(kilobytes_moved / (bw_kbps * interval_seconds) * 100.0, 0.0, 100.0);
}

double utilization_percent(Resource kind, const Host& host, const MemoryModel& memory) {
  switch (kind) {
    case Resource::cpu: return std::clamp(host.cpu_used / host.cpu_capacity * 100.0, 0.0, 100.0);
    case Resource::memory: return memory_percent(host.ram_capacity, host.ram_used, memory);
    case Resource::disk: return std::clamp(host.disk_used / host.disk_capacity * 100.0, 0.0, 100.0);
    case Resource::network: return network_percent(host.bw_used, host.bw_capacity, 1.0);
  }
  return 0;
}

double sla_violation_rate(std::span<const JobOutcome> jobs) {
  if (jobs.empty()) throw std::invalid_argument("sla_violation_rate: no jobs");
  double sum = 0;
  for (const auto& j : jobs)
    if (j.violated) sum += j.weight;
  return sum / static_cast<double>(jobs.size());
}

MapeResult mape(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw std::invalid_argument("mape: length mismatch");
  MapeResult r;
  double sum = 0;
  for (std::size_t t = 0; t < actual.size(); ++t) {
    if (actual[t] == 0.0) {
      ++r.excluded;
      continue;
    }
    ++r.included;
    sum += std::abs((actual[t] - predicted[t]) / actual[t]);
  }
  if (r.included > 0) r.value = 100.0 * sum / r.included;
  return r;
}

double f1_score(double tp, double fp, double fn, bool as_printed) {
  if (tp + fp + fn <= 0) throw std::invalid_argument("f1_score: all counts are zero");
  if (as_printed) {
    const double denom = tp + 0.5 * (fp + tp);
    return denom > 0 ? tp / denom : 0.0;
  }
  return tp / (tp + 0.5 * (fp + fn));
}

Aggregates aggregate(std::span<const MetricsSample> series, const MetricsOptions& options) {
  Aggregates a;
  a.intervals = static_cast<int>(series.size());
  double response = 0, restart = 0, job_response = 0, sla_weighted = 0;
  std::int64_t sla_jobs = 0, tp = 0, fp = 0, fn = 0;
  std::vector<double> actual, predicted;
  for (const auto& s : series) {
    a.total_energy += s.energy;
    a.mean_contention += s.contention;
    a.mean_cpu_util += s.cpu_util;
    a.mean_ram_util += s.ram_util;
    a.mean_disk_util += s.disk_util;
    a.mean_net_util += s.net_util;
    a.tasks_completed += s.tasks_completed;
    a.tasks_failed += s.tasks_failed;
    a.jobs_completed += s.jobs_completed;
    a.mitigations += s.mitigations;
    response += s.response_sum;
    restart += s.restart_sum;
    job_response += s.job_response_sum;
    sla_jobs += s.sla_jobs;
    sla_weighted += s.sla_violations;
    tp += s.tp;
    fp += s.fp;
    fn += s.fn;
    actual.push_back(s.stragglers_actual);
    predicted.push_back(s.stragglers_predicted);
  }
  if (!series.empty()) {
    const double n = static_cast<double>(series.size());
    a.mean_contention /= n;
    a.mean_cpu_util /= n;
    a.mean_ram_util /= n;
    a.mean_disk_util /= n;
    a.mean_net_util /= n;
  }
  if (a.tasks_completed > 0) {
    const double q = static_cast<double>(a.tasks_completed);
    a.avg_execution_time = response / q + (options.restart_averaged ? restart / q : restart);
  }
  if (a.jobs_completed > 0) a.mean_job_completion = job_response / static_cast<double>(a.jobs_completed);
  if (sla_jobs > 0) a.sla_violation_rate = sla_weighted / static_cast<double>(sla_jobs);
  const MapeResult m = mape(actual, predicted);
  a.mape = m.value;
  a.mape_excluded = m.excluded;
  if (tp + fp + fn > 0)
    a.f1 = f1_score(static_cast<double>(tp), static_cast<double>(fp), static_cast<double>(fn), options.f1_as_printed);
  return a;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

nlohmann::json aggregates_to_json(const Aggregates& a) {
  return {{"intervals", a.intervals},
          {"total_energy", a.total_energy},
          {"mean_contention", a.mean_contention},
          {"avg_execution_time", opt(a.avg_execution_time)},
          {"mean_job_completion", opt(a.mean_job_completion)},
          {"sla_violation_rate", opt(a.sla_violation_rate)},
          {"mean_cpu_util", a.mean_cpu_util},
          {"mean_ram_util", a.mean_ram_util},
          {"mean_disk_util", a.mean_disk_util},
          {"mean_net_util", a.mean_net_util},
          {"mape", opt(a.mape)},
          {"mape_excluded_intervals", a.mape_excluded},
          {"f1", opt(a.f1)},
          {"tasks_completed", a.tasks_completed},
          {"tasks_failed", a.tasks_failed},
          {"jobs_completed", a.jobs_completed},
          {"mitigations", a.mitigations}};
}

Aggregates aggregates_from_json(const nlohmann::json& j) {
  Aggregates a;
  a.intervals = j.at("intervals").get<int>();
  a.total_energy = j.at("total_energy").get<double>();
  a.mean_contention = j.at("mean_contention").get<double>();
  a.avg_execution_time = opt_from(j, "avg_execution_time");
  a.mean_job_completion = opt_from(j, "mean_job_completion");
  a.sla_violation_rate = opt_from(j, "sla_violation_rate");
  a.mean_cpu_util = j.at("mean_cpu_util").get<double>();
  a.mean_ram_util = j.at("mean_ram_util").get<double>();
  a.mean_disk_util = j.at("mean_disk_util").get<double>();
  a.mean_net_util = j.at("mean_net_util").get<double>();
  a.mape = opt_from(j, "mape");
  a.mape_excluded = j.at("mape_excluded_intervals").get<int>();
  a.f1 = opt_from(j, "f1");
  a.tasks_completed = j.at("tasks_completed").get<std::int64_t>();
  a.tasks_failed = j.at("tasks_failed").get<std::int64_t>();
  a.jobs_completed = j.at("jobs_completed").get<std::int64_t>();
  a.mitigations = j.at("mitigations").get<std::int64_t>();
  return a;
}

nlohmann::json report_to_json(const MetricsReport& report) {
  nlohmann::json series = nlohmann::json::array();
  for (const auto& s : report.series) {
    series.push_back({{"interval", s.interval_index},
                      {"energy", s.energy},
                      {"contention", s.contention},
                      {"cpu_util", s.cpu_util},
                      {"ram_util", s.ram_util},
                      {"disk_util", s.disk_util},
                      {"net_util", s.net_util},
                      {"tasks_completed", s.tasks_completed},
                      {"jobs_completed", s.jobs_completed}});
  }
  return {{"run_id", report.run_id},
          {"seed", report.seed},
          {"policy", report.policy},
          {"options", {{"f1_as_printed", report.options.f1_as_printed},
                       {"restart_averaged", report.options.restart_averaged}}},
          {"totals", aggregates_to_json(report.totals)},
          {"series", std::move(series)}};
}

const std::vector<std::string>& series_columns() {
  static const std::vector<std::string> cols{
      "interval",          "energy",          "power_min_seen",     "power_max_seen",       "contention",
      "cpu_util",          "ram_util",        "disk_util",          "net_util",             "tasks_completed",
      "response_sum",      "restart_sum",     "jobs_completed",     "job_response_sum",     "sla_jobs",
      "sla_violations",    "stragglers_actual", "stragglers_predicted", "tp",                "fp",
      "fn",                "mitigations",     "tasks_failed"};
  return cols;
}

void write_series_csv(std::ostream& out, std::span<const MetricsSample> series) {
  const auto& cols = series_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& s : series) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", s.interval_index,
                       s.energy, s.power_min_seen, s.power_max_seen, s.contention, s.cpu_util, s.ram_util,
                       s.disk_util, s.net_util, s.tasks_completed, s.response_sum, s.restart_sum, s.jobs_completed,
                       s.job_response_sum, s.sla_jobs, s.sla_violations, s.stragglers_actual,
                       s.stragglers_predicted, s.tp, s.fp, s.fn, s.mitigations, s.tasks_failed);
  }
}

std::vector<MetricsSample> read_series_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("series csv: empty");
  std::string expected;
  for (std::size_t i = 0; i < series_columns().size(); ++i) expected += (i ? "," : "") + series_columns()[i];
  if (line != expected) throw std::runtime_error("series csv: unexpected header");
  std::vector<MetricsSample> series;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> c;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) c.push_back(cell);
    if (c.size() != series_columns().size()) throw std::runtime_error("series csv: wrong column count");
    MetricsSample s;
    std::size_t i = 0;
    s.interval_index = std::stoi(c[i++]);
    s.energy = std::stod(c[i++]);
    s.power_min_seen = std::stod(c[i++]);
    s.power_max_seen = std::stod(c[i++]);
    s.contention = std::stod(c[i++]);
    s.cpu_util = std::stod(c[i++]);
    s.ram_util = std::stod(c[i++]);
    s.disk_util = std::stod(c[i++]);
    s.net_util = std::stod(c[i++]);
    s.tasks_completed = std::stoll(c[i++]);
    s.response_sum = std::stod(c[i++]);
    s.restart_sum = std::stod(c[i++]);
    s.jobs_completed = std::stoll(c[i++]);
    s.job_response_sum = std::stod(c[i++]);
    s.sla_jobs = std::stoll(c[i++]);
    s.sla_violations = std::stod(c[i++]);
    s.stragglers_actual = std::stod(c[i++]);
    s.stragglers_predicted = std::stod(c[i++]);
    s.tp = std::stoll(c[i++]);
    s.fp = std::stoll(c[i++]);
    s.fn = std::stoll(c[i++]);
    s.mitigations = std::stoll(c[i++]);
    s.tasks_failed = std::stoll(c[i++]);
    series.push_back(s);
  }
  return series;
}

}  // namespace straggler::metrics
