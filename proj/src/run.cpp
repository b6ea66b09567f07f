#include "straggler/run.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <sstream>

#include <Eigen/Core>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "straggler/features.hpp"
#include "straggler/log.hpp"
#include "straggler/workload.hpp"

namespace straggler {

namespace {

std::string hex_digest(const unsigned char* data, unsigned int len) {
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", data[i]);
  return out;
}

std::string sha256(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  return hex_digest(md, len);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
}

}  // namespace

neural::Shape network_shape(const SimConfig& config) {
  neural::Shape s;
  s.input = feature_width(config.fleet.n_hosts, config.workload.max_tasks);
  return s;
}

std::string config_hash(const SimConfig& config) { return sha256(dump_config(config)); }

std::string sha256_file(const std::filesystem::path& path) { return sha256(read_file(path)); }

std::string make_run_id(const SimConfig& config) {
  return fmt::format("{}-s{}-{}", to_string(config.policy), config.seed, config_hash(config).substr(0, 8));
}

RunArtifacts run_with_policy(const SimConfig& config, mitigation::Policy& policy) {
  const auto t0 = std::chrono::steady_clock::now();
  sim::Simulator sim(config, build_fleet(config), resolve_trace(config), policy);
  RunArtifacts run;
  run.report.series = sim.run();
  run.report.run_id = make_run_id(config);
  run.report.seed = config.seed;
  run.report.policy = policy.name();
  run.report.options = {config.metrics.f1_as_printed, config.metrics.restart_averaged};
  run.report.totals = metrics::aggregate(run.report.series, run.report.options);
  run.stats = sim.stats();
  run.lowest_host_power = sim.lowest_host_power();
  run.highest_host_power = sim.highest_host_power();
  run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  sim_log().info("{}: {} intervals, {} tasks completed, {} failed, {} mitigations in {:.2f}s", run.report.run_id,
                 run.report.totals.intervals, run.report.totals.tasks_completed, run.report.totals.tasks_failed,
                 run.report.totals.mitigations, run.wall_seconds);
  return run;
}

RunArtifacts run_simulation(const SimConfig& config, std::shared_ptr<const neural::Network> net) {
  const auto fleet = build_fleet(config);
  if (config.policy == PolicyId::start && !net) throw std::invalid_argument("policy start needs a checkpoint");
  if (net && config.policy == PolicyId::start && net->shape().input != network_shape(config).input)
    throw std::invalid_argument(fmt::format("checkpoint expects {} input features, config produces {}",
                                            net->shape().input, network_shape(config).input));
  auto policy = mitigation::make_policy(config, fleet, std::move(net));
  return run_with_policy(config, *policy);
}

void write_run(const std::filesystem::path& dir, const SimConfig& config, const RunArtifacts& run) {
  std::filesystem::create_directories(dir);
  write_file(dir / "report.json", metrics::report_to_json(run.report).dump(2) + "\n");
  {
    std::ofstream csv(dir / "series.csv", std::ios::binary | std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write series.csv");
    metrics::write_series_csv(csv, run.report.series);
  }
  write_file(dir / "config.conf", dump_config(config));

  nlohmann::json files = nlohmann::json::array();
  for (const char* name : {"report.json", "series.csv", "config.conf"})
    files.push_back({{"name", name}, {"sha256", sha256_file(dir / name)}});
  const nlohmann::json manifest{
      {"run_id", run.report.run_id},
      {"seed", config.seed},
      {"policy", run.report.policy},
      {"config_sha256", config_hash(config)},
      {"versions",
       {{"straggler_sim", kVersion},
        {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
        {"fmt", FMT_VERSION},
        {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                      NLOHMANN_JSON_VERSION_PATCH)},
        {"compiler", __VERSION__}}},
      {"duration_seconds", run.wall_seconds},
      {"faults",
       {{"host", run.stats.host_faults},
        {"task", run.stats.task_faults},
        {"vm_creation", run.stats.vm_creation_faults},
        {"restarts", run.stats.restarts}}},
      {"files", files}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

EvaluateResult evaluate_run(const std::filesystem::path& dir) {
  const auto report = nlohmann::json::parse(read_file(dir / "report.json"));
  metrics::MetricsOptions options;
  options.f1_as_printed = report.at("options").at("f1_as_printed").get<bool>();
  options.restart_averaged = report.at("options").at("restart_averaged").get<bool>();
  std::ifstream csv(dir / "series.csv", std::ios::binary);
  if (!csv) throw std::runtime_error("cannot read series.csv");
  const auto series = metrics::read_series_csv(csv);

  EvaluateResult r;
  r.stored = metrics::aggregates_from_json(report.at("totals"));
  r.recomputed = metrics::aggregate(series, options);
  const auto a = metrics::aggregates_to_json(r.stored);
  const auto b = metrics::aggregates_to_json(r.recomputed);
  for (const auto& [key, value] : a.items())
    if (!b.contains(key) || b.at(key) != value)
      r.mismatches.push_back(fmt::format("{}: stored {} recomputed {}", key, value.dump(),
                                         b.contains(key) ? b.at(key).dump() : "missing"));
  return r;
}

HarvestResult harvest_dataset(const SimConfig& config) {
  HarvestResult out;
  for (int r = 0; r < config.train.harvest_runs; ++r) {
    SimConfig cfg = config;
    cfg.seed = config.seed * 1000003ULL + 17 + static_cast<std::uint64_t>(r);
    cfg.scheduler = SchedulerKind::random;
    cfg.policy = PolicyId::none;
    cfg.horizon_intervals = config.train.harvest_intervals;
    if (cfg.workload.arrival_intervals > cfg.horizon_intervals) cfg.workload.arrival_intervals = 0;
    const auto fleet = build_fleet(cfg);
    mitigation::HarvestPolicy policy(mitigation::window_settings(cfg, fleet), cfg.predictor.observe_interval,
                                     cfg.predictor.alpha_label_max);
    sim::Simulator sim(cfg, fleet, resolve_trace(cfg), policy);
    sim.run();
    auto examples = policy.take_examples();
    for (auto& e : examples) e.interval += static_cast<std::int64_t>(r) * cfg.horizon_intervals;
    out.discarded += policy.discarded();
    std::move(examples.begin(), examples.end(), std::back_inserter(out.examples));
  }
  sim_log().info("harvested {} examples ({} jobs without a usable label)", out.examples.size(), out.discarded);
  return out;
}

TrainingOutcome train_predictor(const SimConfig& config, std::span<const predictor::TrainingExample> examples) {
  TrainingOutcome out;
  out.net = std::make_shared<neural::Network>(network_shape(config), config.train.init_seed);
  predictor::TrainOptions options;
  options.epochs = config.train.epochs;
  options.lr = config.train.lr;
  options.split = config.train.split;
  options.seed = config.seed;
  options.time_unit = config.interval_seconds;
  out.result = predictor::train(*out.net, examples, options);
  return out;
}

metrics::MapeResult straggler_count_mape(std::span<const predictor::TrainingExample> examples,
                                         std::span<const std::size_t> index,
                                         const std::function<pareto::Params(const predictor::TrainingExample&)>& predict,
                                         double k, double alpha_max) {
  std::map<std::int64_t, std::pair<double, double>> per_interval;
  for (std::size_t i : index) {
    const auto& ex = examples[i];
    if (ex.response_times.empty()) continue;
    const auto fit = predictor::label_from_times(ex.response_times, alpha_max);
    if (!fit) continue;
    const auto flags = pareto::classify_stragglers(ex.response_times, pareto::straggler_threshold(*fit, k));
    const auto q = static_cast<int>(ex.response_times.size());
    auto& [actual, predicted] = per_interval[ex.interval];
    actual += static_cast<double>(std::count(flags.begin(), flags.end(), true));
    predicted += pareto::expected_stragglers(pareto::clamp_for_use(predict(ex)), q, k).expected;
  }
  std::vector<double> actual, predicted;
  for (const auto& [interval, counts] : per_interval) {
    actual.push_back(counts.first);
    predicted.push_back(counts.second);
  }
  return metrics::mape(actual, predicted);
}

PredictorQuality evaluate_predictor(const neural::Network& net, std::span<const predictor::TrainingExample> examples,
                                    const predictor::TrainResult& split, const SimConfig& config) {
  PredictorQuality q;
  double alpha = 0, beta = 0;
  for (std::size_t i : split.train_index) {
    alpha += examples[i].target.alpha;
    beta += examples[i].target.beta;
  }
  const auto n = static_cast<double>(std::max<std::size_t>(1, split.train_index.size()));
  q.mean_params = {alpha / n, beta / n};
  const double k = config.predictor.k;
  const double amax = config.predictor.alpha_label_max;
  const double unit = config.interval_seconds;
  q.network = straggler_count_mape(
      examples, split.test_index,
      [&](const predictor::TrainingExample& ex) {
        pareto::Params p = pareto::clamp_for_use(net.predict(ex.input_sequence));
        p.beta *= unit;
        return p;
      },
      k, amax);
  q.global_mean = straggler_count_mape(
      examples, split.test_index, [&](const predictor::TrainingExample&) { return q.mean_params; }, k, amax);
  return q;
}

}  // namespace straggler
