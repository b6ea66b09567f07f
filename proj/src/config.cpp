#include "straggler/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>

namespace straggler {

std::string to_string(SchedulerKind s) { return s == SchedulerKind::random ? "random" : "least-loaded"; }

std::string to_string(PolicyId p) {
  switch (p) {
    case PolicyId::start: return "start";
    case PolicyId::none: return "none";
    case PolicyId::reactive: return "reactive";
    case PolicyId::nearestfit: return "nearestfit";
    case PolicyId::dolly: return "dolly";
    case PolicyId::wrangler: return "wrangler";
  }
  return "none";
}

SchedulerKind parse_scheduler(const std::string& s) {
  if (s == "least-loaded") return SchedulerKind::least_loaded;
  if (s == "random") return SchedulerKind::random;
  throw ConfigError("unknown scheduler '" + s + "'");
}

const std::vector<PolicyId>& all_policies() {
  static const std::vector<PolicyId> ids{PolicyId::start,      PolicyId::none,  PolicyId::reactive,
                                         PolicyId::nearestfit, PolicyId::dolly, PolicyId::wrangler};
  return ids;
}

PolicyId parse_policy(const std::string& s) {
  for (PolicyId p : all_policies())
    if (to_string(p) == s) return p;
  throw ConfigError("unknown policy '" + s + "'");
}

int PredictorConfig::window_steps() const {
  return std::max(1, static_cast<int>(std::lround(window / observe_interval)));
}

SimConfig::SimConfig() {
  // Per-node MIPS scales cores x GHz / virtual nodes so that the default
  // fleet averages 2000 MIPS; RAM and disk are the machine totals split
  // across its virtual nodes.
  fleet.classes = {
      {"core2duo", 12, 635, 512, 26667, 1.0, 3, 0, 0},
      {"i5", 6, 3069, 683, 26667, 1.5, 4, 0, 0},
      {"xeon", 2, 6984, 1024, 80000, 2.0, 5, 0, 0},
  };
}

namespace {

std::string fmt_double(double v) { return fmt::format("{}", v); }

double parse_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

struct Field {
  std::function<void(SimConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const SimConfig&)> get;
};

template <typename Member>
Field number(Member member) {
  return {[member](SimConfig& c, const std::string& key, const std::string& v) {
            auto& ref = member(c);
            using T = std::remove_reference_t<decltype(ref)>;
            if constexpr (std::is_same_v<T, double>)
              ref = parse_double(key, v);
            else if constexpr (std::is_same_v<T, bool>)
              ref = parse_bool(key, v);
            else if constexpr (std::is_same_v<T, std::string>)
              ref = v;
            else
              ref = static_cast<T>(parse_int(key, v));
          },
          [member](const SimConfig& c) {
            auto& ref = member(const_cast<SimConfig&>(c));
            using T = std::remove_reference_t<decltype(ref)>;
            if constexpr (std::is_same_v<T, double>)
              return fmt_double(ref);
            else if constexpr (std::is_same_v<T, bool>)
              return std::string(ref ? "true" : "false");
            else if constexpr (std::is_same_v<T, std::string>)
              return ref;
            else
              return std::to_string(ref);
          }};
}

#define STRAGGLER_FIELD(key, expr) \
  fields.emplace_back(key, number([](SimConfig& c) -> auto& { return expr; }))

std::vector<std::pair<std::string, Field>> build_fields() {
  std::vector<std::pair<std::string, Field>> fields;
  STRAGGLER_FIELD("sim.horizon_intervals", c.horizon_intervals);
  STRAGGLER_FIELD("sim.interval_seconds", c.interval_seconds);
  STRAGGLER_FIELD("sim.seed", c.seed);
  fields.emplace_back("sim.scheduler",
                      Field{[](SimConfig& c, const std::string&, const std::string& v) { c.scheduler = parse_scheduler(v); },
                            [](const SimConfig& c) { return to_string(c.scheduler); }});
  fields.emplace_back("sim.policy",
                      Field{[](SimConfig& c, const std::string&, const std::string& v) { c.policy = parse_policy(v); },
                            [](const SimConfig& c) { return to_string(c.policy); }});
  STRAGGLER_FIELD("sim.output_dir", c.output_dir);
  STRAGGLER_FIELD("sim.checkpoint_path", c.checkpoint_path);

  STRAGGLER_FIELD("fleet.n_hosts", c.fleet.n_hosts);
  STRAGGLER_FIELD("fleet.homogeneous", c.fleet.homogeneous);
  STRAGGLER_FIELD("fleet.max_tasks_per_host", c.fleet.max_tasks_per_host);
  const SimConfig defaults_probe;
  for (std::size_t i = 0; i < defaults_probe.fleet.classes.size(); ++i) {
    const std::string prefix = "fleet." + defaults_probe.fleet.classes[i].name + ".";
    auto cls = [i](SimConfig& c) -> MachineClass& { return c.fleet.classes[i]; };
    fields.emplace_back(prefix + "share", number([cls](SimConfig& c) -> auto& { return cls(c).share; }));
    fields.emplace_back(prefix + "mips", number([cls](SimConfig& c) -> auto& { return cls(c).mips; }));
    fields.emplace_back(prefix + "ram_mb", number([cls](SimConfig& c) -> auto& { return cls(c).ram_mb; }));
    fields.emplace_back(prefix + "disk_mb", number([cls](SimConfig& c) -> auto& { return cls(c).disk_mb; }));
    fields.emplace_back(prefix + "bw_kbps", number([cls](SimConfig& c) -> auto& { return cls(c).bw_kbps; }));
    fields.emplace_back(prefix + "cost", number([cls](SimConfig& c) -> auto& { return cls(c).cost; }));
    fields.emplace_back(prefix + "power_min", number([cls](SimConfig& c) -> auto& { return cls(c).power_min; }));
    fields.emplace_back(prefix + "power_max", number([cls](SimConfig& c) -> auto& { return cls(c).power_max; }));
  }

  STRAGGLER_FIELD("workload.poisson_lambda", c.workload.poisson_lambda);
  STRAGGLER_FIELD("workload.min_tasks", c.workload.min_tasks);
  STRAGGLER_FIELD("workload.max_tasks", c.workload.max_tasks);
  STRAGGLER_FIELD("workload.cpu_min", c.workload.cpu_min);
  STRAGGLER_FIELD("workload.cpu_max", c.workload.cpu_max);
  STRAGGLER_FIELD("workload.ram_min", c.workload.ram_min);
  STRAGGLER_FIELD("workload.ram_max", c.workload.ram_max);
  STRAGGLER_FIELD("workload.disk_min", c.workload.disk_min);
  STRAGGLER_FIELD("workload.disk_max", c.workload.disk_max);
  STRAGGLER_FIELD("workload.bw_min", c.workload.bw_min);
  STRAGGLER_FIELD("workload.bw_max", c.workload.bw_max);
  STRAGGLER_FIELD("workload.length_mean", c.workload.length_mean);
  STRAGGLER_FIELD("workload.length_std", c.workload.length_std);
  STRAGGLER_FIELD("workload.length_scale", c.workload.length_scale);
  STRAGGLER_FIELD("workload.deadline_fraction", c.workload.deadline_fraction);
  STRAGGLER_FIELD("workload.sla_slack", c.workload.sla_slack);
  STRAGGLER_FIELD("workload.arrival_intervals", c.workload.arrival_intervals);
  STRAGGLER_FIELD("workload.trace_path", c.workload.trace_path);

  STRAGGLER_FIELD("faults.enabled", c.faults.enabled);
  STRAGGLER_FIELD("faults.host_faults", c.faults.host_faults);
  STRAGGLER_FIELD("faults.task_faults", c.faults.task_faults);
  STRAGGLER_FIELD("faults.vm_creation_faults", c.faults.vm_creation_faults);
  STRAGGLER_FIELD("faults.weibull_k", c.faults.weibull_k);
  STRAGGLER_FIELD("faults.weibull_lambda", c.faults.weibull_lambda);
  STRAGGLER_FIELD("faults.unit_intervals", c.faults.unit_intervals);
  STRAGGLER_FIELD("faults.downtime_max", c.faults.downtime_max);

  STRAGGLER_FIELD("energy.e_min", c.energy.e_min);
  STRAGGLER_FIELD("energy.e_max", c.energy.e_max);

  STRAGGLER_FIELD("predictor.k", c.predictor.k);
  STRAGGLER_FIELD("predictor.adapt_k", c.predictor.adapt_k);
  STRAGGLER_FIELD("predictor.k_adapt_period", c.predictor.k_adapt_period);
  STRAGGLER_FIELD("predictor.observe_interval", c.predictor.observe_interval);
  STRAGGLER_FIELD("predictor.window", c.predictor.window);
  STRAGGLER_FIELD("predictor.ema_weight", c.predictor.ema_weight);
  STRAGGLER_FIELD("predictor.alpha_label_max", c.predictor.alpha_label_max);

  STRAGGLER_FIELD("train.epochs", c.train.epochs);
  STRAGGLER_FIELD("train.lr", c.train.lr);
  STRAGGLER_FIELD("train.split", c.train.split);
  STRAGGLER_FIELD("train.harvest_runs", c.train.harvest_runs);
  STRAGGLER_FIELD("train.harvest_intervals", c.train.harvest_intervals);
  STRAGGLER_FIELD("train.init_seed", c.train.init_seed);

  STRAGGLER_FIELD("mitigation.straggler_ema_weight", c.mitigation.straggler_ema_weight);
  STRAGGLER_FIELD("mitigation.straggler_factor", c.mitigation.straggler_factor);
  STRAGGLER_FIELD("mitigation.reactive_factor", c.mitigation.reactive_factor);
  STRAGGLER_FIELD("mitigation.nearestfit_factor", c.mitigation.nearestfit_factor);
  STRAGGLER_FIELD("mitigation.dolly_budget", c.mitigation.dolly_budget);
  STRAGGLER_FIELD("mitigation.wrangler_threshold", c.mitigation.wrangler_threshold);
  STRAGGLER_FIELD("mitigation.wrangler_max_delays", c.mitigation.wrangler_max_delays);

  STRAGGLER_FIELD("metrics.f1_as_printed", c.metrics.f1_as_printed);
  STRAGGLER_FIELD("metrics.restart_averaged", c.metrics.restart_averaged);
  STRAGGLER_FIELD("metrics.ram_buffer_fraction", c.metrics.ram_buffer_fraction);
  STRAGGLER_FIELD("metrics.ram_cache_fraction", c.metrics.ram_cache_fraction);
  return fields;
}

#undef STRAGGLER_FIELD

const std::vector<std::pair<std::string, Field>>& fields() {
  static const auto f = build_fields();
  return f;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key + ": " + what);
}

}  // namespace

void SimConfig::validate() const {
  require(horizon_intervals >= 0, "sim.horizon_intervals", "must be non-negative");
  require(interval_seconds > 0, "sim.interval_seconds", "must be positive");
  require(fleet.n_hosts >= 1, "fleet.n_hosts", "must be at least 1");
  require(fleet.max_tasks_per_host >= 1, "fleet.max_tasks_per_host", "must be at least 1");
  for (const auto& c : fleet.classes) {
    const std::string p = "fleet." + c.name + ".";
    require(c.share >= 0, p + "share", "must be non-negative");
    require(c.mips > 0, p + "mips", "must be positive");
    require(c.ram_mb > 0, p + "ram_mb", "must be positive");
    require(c.disk_mb > 0, p + "disk_mb", "must be positive");
    require(c.bw_kbps > 0, p + "bw_kbps", "must be positive");
    require(c.cost >= 0, p + "cost", "must be non-negative");
    require(c.power_min >= 0 && c.power_max >= 0, p + "power_min", "must be non-negative");
  }
  require(workload.poisson_lambda > 0, "workload.poisson_lambda", "must be positive");
  require(workload.min_tasks >= 2, "workload.min_tasks", "must be at least 2");
  require(workload.max_tasks >= workload.min_tasks, "workload.max_tasks", "must be >= workload.min_tasks");
  require(workload.cpu_min > 0 && workload.cpu_max >= workload.cpu_min, "workload.cpu_min", "invalid range");
  require(workload.ram_min >= 0 && workload.ram_max >= workload.ram_min, "workload.ram_min", "invalid range");
  require(workload.disk_min >= 0 && workload.disk_max >= workload.disk_min, "workload.disk_min", "invalid range");
  require(workload.bw_min >= 0 && workload.bw_max >= workload.bw_min, "workload.bw_min", "invalid range");
  require(workload.length_mean > 0 && workload.length_std >= 0, "workload.length_mean", "invalid length");
  require(workload.length_scale > 0, "workload.length_scale", "must be positive");
  require(workload.deadline_fraction >= 0 && workload.deadline_fraction <= 1, "workload.deadline_fraction",
          "must be in [0, 1]");
  require(workload.sla_slack > 0, "workload.sla_slack", "must be positive");
  require(workload.arrival_intervals >= 0, "workload.arrival_intervals", "must be non-negative");
  require(faults.weibull_k > 0, "faults.weibull_k", "must be positive");
  require(faults.weibull_lambda > 0, "faults.weibull_lambda", "must be positive");
  require(faults.unit_intervals > 0, "faults.unit_intervals", "must be positive");
  require(faults.downtime_max >= 1, "faults.downtime_max", "must be at least 1");
  require(energy.e_min >= 0 && energy.e_max >= energy.e_min, "energy.e_min", "need 0 <= e_min <= e_max");
  require(predictor.k > 0, "predictor.k", "must be positive");
  require(predictor.k_adapt_period >= 1, "predictor.k_adapt_period", "must be at least 1");
  require(predictor.observe_interval > 0, "predictor.observe_interval", "must be positive");
  require(predictor.window >= predictor.observe_interval, "predictor.window", "must be >= observe_interval");
  require(predictor.ema_weight > 0 && predictor.ema_weight <= 1, "predictor.ema_weight", "must be in (0, 1]");
  require(predictor.alpha_label_max > 1, "predictor.alpha_label_max", "must exceed 1");
  require(train.epochs >= 0, "train.epochs", "must be non-negative");
  require(train.lr > 0, "train.lr", "must be positive");
  require(train.split > 0 && train.split < 1, "train.split", "must be in (0, 1)");
  require(train.harvest_runs >= 1, "train.harvest_runs", "must be at least 1");
  require(train.harvest_intervals >= 1, "train.harvest_intervals", "must be at least 1");
  require(mitigation.straggler_ema_weight > 0 && mitigation.straggler_ema_weight <= 1,
          "mitigation.straggler_ema_weight", "must be in (0, 1]");
  require(mitigation.straggler_factor > 0, "mitigation.straggler_factor", "must be positive");
  require(mitigation.reactive_factor > 0, "mitigation.reactive_factor", "must be positive");
  require(mitigation.nearestfit_factor > 0, "mitigation.nearestfit_factor", "must be positive");
  require(mitigation.dolly_budget >= 0, "mitigation.dolly_budget", "must be non-negative");
  require(mitigation.wrangler_threshold >= 0 && mitigation.wrangler_threshold <= 1,
          "mitigation.wrangler_threshold", "must be in [0, 1]");
  require(mitigation.wrangler_max_delays >= 0, "mitigation.wrangler_max_delays", "must be non-negative");
  require(metrics.ram_buffer_fraction >= 0 && metrics.ram_cache_fraction >= 0 &&
              metrics.ram_buffer_fraction + metrics.ram_cache_fraction <= 1,
          "metrics.ram_buffer_fraction", "fractions must be non-negative and sum to at most 1");
}

SimConfig parse_config(const std::string& text) {
  std::map<std::string, const Field*> index;
  for (const auto& [key, field] : fields()) index.emplace(key, &field);

  SimConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = index.find(key);
    if (it == index.end()) throw ConfigError(fmt::format("line {}: unknown key '{}'", line_no, key));
    it->second->set(config, key, value);
  }
  config.validate();
  return config;
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const SimConfig& config) {
  std::string out;
  std::string section;
  for (const auto& [key, field] : fields()) {
    const std::string sec = key.substr(0, key.find('.'));
    if (sec != section) {
      if (!section.empty()) out += '\n';
      section = sec;
    }
    out += key + " = " + field.get(config) + '\n';
  }
  return out;
}

}  // namespace straggler
