#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace straggler {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SchedulerKind { least_loaded, random };
enum class PolicyId { start, none, reactive, nearestfit, dolly, wrangler };

std::string to_string(SchedulerKind s);
std::string to_string(PolicyId p);
SchedulerKind parse_scheduler(const std::string& s);
PolicyId parse_policy(const std::string& s);
const std::vector<PolicyId>& all_policies();

// One row of the physical machine table; each virtual node becomes one simulated host.
struct MachineClass {
  std::string name;
  double share = 1;  // relative number of virtual nodes
  double mips = 2000;
  double ram_mb = 1024;
  double disk_mb = 80000;
  double bw_kbps = 1.5;
  double cost = 4;
  double power_min = 0;  // 0 falls back to energy.e_min
  double power_max = 0;  // 0 falls back to energy.e_max

  bool operator==(const MachineClass&) const = default;
};

struct FleetConfig {
  int n_hosts = 20;
  bool homogeneous = false;  // only the first machine class
  int max_tasks_per_host = 16;
  std::vector<MachineClass> classes;

  bool operator==(const FleetConfig&) const = default;
};

struct WorkloadConfig {
  double poisson_lambda = 1.2;
  int min_tasks = 2;
  int max_tasks = 10;  // q'
  double cpu_min = 500, cpu_max = 1500;  // MIPS
  double ram_min = 64, ram_max = 256;    // MB
  double disk_min = 180, disk_max = 420; // MB
  double bw_min = 0.1, bw_max = 0.5;     // KB/s
  double length_mean = 10000, length_std = 3000;
  double length_scale = 100;  // MI per workload-size unit
  double deadline_fraction = 0.5;
  double sla_slack = 1.5;
  int arrival_intervals = 0;  // 0: arrivals across the whole horizon
  std::string trace_path;

  bool operator==(const WorkloadConfig&) const = default;
};

struct FaultConfig {
  bool enabled = true;
  bool host_faults = true;
  bool task_faults = true;
  bool vm_creation_faults = true;
  double weibull_k = 1.5;
  double weibull_lambda = 2.0;
  double unit_intervals = 10;  // one Weibull time unit, in scheduling intervals
  int downtime_max = 4;

  bool operator==(const FaultConfig&) const = default;
};

struct EnergyConfig {
  double e_min = 108;
  double e_max = 273;

  bool operator==(const EnergyConfig&) const = default;
};

struct PredictorConfig {
  double k = 1.5;
  bool adapt_k = true;
  int k_adapt_period = 50;
  double observe_interval = 1;  // I, seconds
  double window = 5;            // T, seconds
  double ema_weight = 0.8;
  double alpha_label_max = 10;  // label alphas are clamped into (1, max]

  int window_steps() const;
  bool operator==(const PredictorConfig&) const = default;
};

struct TrainConfig {
  int epochs = 30;
  double lr = 1e-5;
  double split = 0.8;
  int harvest_runs = 4;
  int harvest_intervals = 96;
  std::uint64_t init_seed = 7;

  bool operator==(const TrainConfig&) const = default;
};

struct MitigationConfig {
  double straggler_ema_weight = 0.8;
  double straggler_factor = 1.5;  // a running copy slower than this multiple of its nominal time is a straggler
  double reactive_factor = 1.5;
  double nearestfit_factor = 1.5;
  double dolly_budget = 0.05;
  double wrangler_threshold = 0.7;
  int wrangler_max_delays = 3;

  bool operator==(const MitigationConfig&) const = default;
};

struct MetricsConfig {
  bool f1_as_printed = false;
  bool restart_averaged = false;
  double ram_buffer_fraction = 0;
  double ram_cache_fraction = 0;

  bool operator==(const MetricsConfig&) const = default;
};

struct SimConfig {
  int horizon_intervals = 48;
  double interval_seconds = 300;
  std::uint64_t seed = 1;
  SchedulerKind scheduler = SchedulerKind::least_loaded;
  PolicyId policy = PolicyId::none;
  std::string output_dir = "out";
  std::string checkpoint_path;
  FleetConfig fleet;
  WorkloadConfig workload;
  FaultConfig faults;
  EnergyConfig energy;
  PredictorConfig predictor;
  TrainConfig train;
  MitigationConfig mitigation;
  MetricsConfig metrics;

  SimConfig();
  bool operator==(const SimConfig&) const = default;

  // Throws ConfigError naming the offending key.
  void validate() const;
};

// Flat `section.key = value` lines; `#` starts a comment; unknown keys are rejected.
SimConfig parse_config(const std::string& text);
SimConfig load_config(const std::filesystem::path& path);
std::string dump_config(const SimConfig& config);

}  // namespace straggler
