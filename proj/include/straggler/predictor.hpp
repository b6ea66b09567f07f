#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "straggler/features.hpp"
#include "straggler/neural.hpp"
#include "straggler/pareto.hpp"
#include "straggler/types.hpp"

namespace straggler::predictor {

struct WindowSettings {
  FeatureScales scales;
  int max_tasks = 10;  // q'
  double ema_weight = 0.8;
  int capacity = 5;    // T / I observations
};

// Observations of one job taken every I seconds for T seconds after arrival.
struct PredictionWindow {
  JobId job_id = 0;
  int capacity = 5;
  std::vector<Eigen::VectorXd> observations;  // EMA-smoothed, flattened
  std::optional<Eigen::MatrixXd> ema_hosts;
  std::optional<Eigen::MatrixXd> ema_tasks;
  neural::LstmState lstm_state;
  Eigen::VectorXd top;  // last top-layer hidden state

  bool complete() const { return static_cast<int>(observations.size()) >= capacity; }
};

PredictionWindow open_window(JobId job, const WindowSettings& settings, const neural::Network* net);

// Extracts, smooths and appends one observation; also advances the LSTM when
// a network is given. Throws on a complete window or an unknown job.
void observe(PredictionWindow& window, const ClusterState& state, const WindowSettings& settings,
             const neural::Network* net);

// beta comes out of the network in units of `time_unit` seconds.
pareto::Params predict_params(const PredictionWindow& window, const neural::Network& net, double time_unit);

struct TrainingExample {
  std::vector<Eigen::VectorXd> input_sequence;
  pareto::Params target;  // beta in seconds
  std::vector<double> response_times;  // the job's task response times the label was fitted to
  std::int64_t interval = 0;           // interval the job completed in, unique across harvest runs
};

// Fits the job's response times (completion minus submission). Returns
// nothing for single-task jobs, unfinished tasks or degenerate times. Alpha
// is clamped into (1, alpha_max].
std::optional<pareto::Params> make_label(const ClusterState& state, const Job& job, double alpha_max);
std::optional<pareto::Params> label_from_times(std::span<const double> response_times, double alpha_max);

struct TrainOptions {
  int epochs = 30;
  double lr = 1e-5;
  double split = 0.8;
  std::uint64_t seed = 1;
  double time_unit = 300;
};

struct TrainResult {
  std::vector<double> train_loss;  // per epoch, after the epoch's updates
  std::vector<double> test_loss;
  std::vector<std::size_t> train_index;
  std::vector<std::size_t> test_index;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

Split split_dataset(std::size_t n, double fraction, std::uint64_t seed);

TrainResult train(neural::Network& net, std::span<const TrainingExample> dataset, const TrainOptions& options);

double mean_loss(const neural::Network& net, std::span<const TrainingExample> dataset,
                 std::span<const std::size_t> index, double time_unit);

// One row per (example, step): example_id, step_index, features...; the
// sidecar holds example_id, alpha, beta, interval and the response times joined by ';'.
void write_dataset(const std::filesystem::path& features_csv, const std::filesystem::path& labels_csv,
                   std::span<const TrainingExample> dataset);
std::vector<TrainingExample> read_dataset(const std::filesystem::path& features_csv,
                                          const std::filesystem::path& labels_csv);

}  // namespace straggler::predictor
