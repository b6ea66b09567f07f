#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "straggler/config.hpp"
#include "straggler/metrics.hpp"
#include "straggler/mitigation.hpp"
#include "straggler/neural.hpp"
#include "straggler/predictor.hpp"
#include "straggler/sim.hpp"

namespace straggler {

inline constexpr const char* kVersion = "0.1.0";

struct RunArtifacts {
  metrics::MetricsReport report;
  sim::RunStats stats;
  double lowest_host_power = 0;
  double highest_host_power = 0;
  double wall_seconds = 0;
};

neural::Shape network_shape(const SimConfig& config);

std::string config_hash(const SimConfig& config);  // SHA-256 of the canonical dump, hex
std::string sha256_file(const std::filesystem::path& path);
std::string make_run_id(const SimConfig& config);

// Runs config.policy; START needs `net`.
RunArtifacts run_simulation(const SimConfig& config, std::shared_ptr<const neural::Network> net = nullptr);
RunArtifacts run_with_policy(const SimConfig& config, mitigation::Policy& policy);

// report.json, series.csv, config.conf and manifest.json under `dir`.
void write_run(const std::filesystem::path& dir, const SimConfig& config, const RunArtifacts& run);

struct EvaluateResult {
  metrics::Aggregates stored;
  metrics::Aggregates recomputed;
  std::vector<std::string> mismatches;

  bool consistent() const { return mismatches.empty(); }
};

// Recomputes the aggregates of a written run from its series CSV.
EvaluateResult evaluate_run(const std::filesystem::path& dir);

// Training data from runs under the random scheduler with seeds derived from config.seed.
struct HarvestResult {
  std::vector<predictor::TrainingExample> examples;
  int discarded = 0;
};
HarvestResult harvest_dataset(const SimConfig& config);

struct TrainingOutcome {
  std::shared_ptr<neural::Network> net;
  predictor::TrainResult result;
};
TrainingOutcome train_predictor(const SimConfig& config, std::span<const predictor::TrainingExample> examples);

// Straggler-count MAPE over the intervals the examples completed in. Per
// interval, actual sums the tasks slower than K of each label fit and
// predicted sums E_S from the given parameters.
metrics::MapeResult straggler_count_mape(std::span<const predictor::TrainingExample> examples,
                                         std::span<const std::size_t> index,
                                         const std::function<pareto::Params(const predictor::TrainingExample&)>& predict,
                                         double k, double alpha_max);

struct PredictorQuality {
  metrics::MapeResult network;
  metrics::MapeResult global_mean;
  pareto::Params mean_params;
};
PredictorQuality evaluate_predictor(const neural::Network& net, std::span<const predictor::TrainingExample> examples,
                                    const predictor::TrainResult& split, const SimConfig& config);

}  // namespace straggler
