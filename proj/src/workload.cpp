#include "straggler/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

namespace straggler {

Trace generate_trace(const SimConfig& config) {
  Rng rng = make_stream(config.seed, Stream::workload);
  return generate_trace(config, rng);
}

Trace generate_trace(const SimConfig& config, Rng& rng) {
  const auto& w = config.workload;
  const int arrivals = w.arrival_intervals > 0 ? std::min(w.arrival_intervals, config.horizon_intervals)
                                               : config.horizon_intervals;
  Trace trace;
  TaskId next_task = 0;
  JobId next_job = 0;
  for (int interval = 0; interval < arrivals; ++interval) {
    const int jobs = sample_poisson(rng, w.poisson_lambda);
    for (int j = 0; j < jobs; ++j) {
      const JobId job = next_job++;
      const int q = uniform_int(rng, w.min_tasks, w.max_tasks);
      const bool deadline = uniform01(rng) < w.deadline_fraction;
      for (int a = 0; a < q; ++a) {
        TraceTask t;
        t.task_id = next_task++;
        t.job_id = job;
        t.arrival_interval = interval;
        t.cpu_mips = uniform_real(rng, w.cpu_min, w.cpu_max);
        t.ram_mb = uniform_real(rng, w.ram_min, w.ram_max);
        t.disk_mb = uniform_real(rng, w.disk_min, w.disk_max);
        t.bw_kbps = uniform_real(rng, w.bw_min, w.bw_max);
        const double size = std::max(0.1 * w.length_mean, normal(rng, w.length_mean, w.length_std));
        t.length_mi = size * w.length_scale;
        t.deadline_driven = deadline;
        trace.push_back(t);
      }
    }
  }
  return trace;
}

void write_trace(std::ostream& out, const Trace& trace) {
  out << kTraceHeader << '\n';
  for (const auto& t : trace)
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", t.task_id, t.job_id, t.arrival_interval, t.cpu_mips, t.ram_mb,
                       t.disk_mb, t.bw_kbps, t.length_mi, t.deadline_driven ? 1 : 0);
}

void write_trace(const std::filesystem::path& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write trace " + path.string());
  write_trace(out, trace);
}

Trace read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw std::runtime_error("trace: unexpected header '" + line + "'");
  Trace trace;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9) throw std::runtime_error(fmt::format("trace line {}: expected 9 columns", line_no));
    try {
      TraceTask t;
      t.task_id = std::stoll(cells[0]);
      t.job_id = std::stoll(cells[1]);
      t.arrival_interval = std::stoi(cells[2]);
      t.cpu_mips = std::stod(cells[3]);
      t.ram_mb = std::stod(cells[4]);
      t.disk_mb = std::stod(cells[5]);
      t.bw_kbps = std::stod(cells[6]);
      t.length_mi = std::stod(cells[7]);
      t.deadline_driven = cells[8] == "1" || cells[8] == "true";
      if (t.cpu_mips <= 0 || t.length_mi <= 0 || t.arrival_interval < 0)
        throw std::runtime_error("nonpositive demand");
      trace.push_back(t);
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("trace line {}: {}", line_no, e.what()));
    }
  }
  return trace;
}

Trace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read trace " + path.string());
  return read_trace(in);
}

Trace resolve_trace(const SimConfig& config) {
  if (!config.workload.trace_path.empty()) return read_trace(std::filesystem::path(config.workload.trace_path));
  return generate_trace(config);
}

std::vector<Host> build_fleet(const SimConfig& config) {
  const auto& fleet = config.fleet;
  std::vector<MachineClass> classes = fleet.classes;
  if (fleet.homogeneous) classes.resize(1);
  double total_share = 0;
  for (const auto& c : classes) total_share += c.share;
  if (!(total_share > 0)) throw ConfigError("fleet: machine class shares sum to zero");

  std::vector<int> counts(classes.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const double exact = fleet.n_hosts * classes[i].share / total_share;
    counts[i] = static_cast<int>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - counts[i], i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < fleet.n_hosts; ++r, ++assigned) ++counts[remainders[r % remainders.size()].second];

  std::vector<Host> hosts;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto& c = classes[i];
    for (int k = 0; k < counts[i]; ++k) {
      Host h;
      h.id = static_cast<HostId>(hosts.size());
      h.machine_class = c.name;
      h.cpu_capacity = c.mips;
      h.ram_capacity = c.ram_mb;
      h.disk_capacity = c.disk_mb;
      h.bw_capacity = c.bw_kbps;
      h.cost_per_interval = c.cost;
      h.power_min = c.power_min > 0 ? c.power_min : config.energy.e_min;
      h.power_max = c.power_max > 0 ? c.power_max : config.energy.e_max;
      hosts.push_back(std::move(h));
    }
  }
  return hosts;
}

}  // namespace straggler
