#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "straggler/config.hpp"
#include "straggler/neural.hpp"
#include "straggler/pareto.hpp"
#include "straggler/predictor.hpp"
#include "straggler/types.hpp"

namespace straggler::mitigation {

enum class ActionKind { none, speculate, rerun, delay_start, clone };

struct MitigationAction {
  ActionKind kind = ActionKind::none;
  TaskId task_id = 0;
  HostId target_host = kNoHost;

  bool operator==(const MitigationAction&) const = default;
};

using Actions = std::vector<MitigationAction>;

// Prediction quality for one finished job; only predicting policies fill it.
struct PredictionOutcome {
  bool has_prediction = false;
  double actual = 0;     // tasks slower than K under the job's own fit
  double predicted = 0;  // E_S from the predicted parameters
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

class NoCandidateHost : public SimError {
 public:
  using SimError::SimError;
};

// Online host other than `exclude` with the lowest straggler moving average,
// lowest id on ties. When `task` is given the host must also fit its RAM and
// disk and have spare CPU for its full requirement.
std::optional<HostId> try_select_node(const ClusterState& state, HostId exclude, const Task* task = nullptr);
HostId select_node(const ClusterState& state, HostId exclude, const Task* task = nullptr);

// Hooks the engine calls; every policy is a deterministic function of state.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;

  // Seconds after job arrival at which on_observe fires.
  virtual std::vector<double> observation_offsets() const { return {}; }
  virtual void on_job_arrival(const ClusterState&, const Job&) {}
  virtual Actions on_observe(const ClusterState&, const Job&) { return {}; }
  // After one of the job's tasks completed.
  virtual Actions on_job_progress(const ClusterState&, const Job&) { return {}; }
  // At every interval boundary, before queued tasks are placed.
  virtual Actions on_interval(const ClusterState&) { return {}; }
  virtual Actions on_task_placed(const ClusterState&, const Task&) { return {}; }
  virtual bool delay_placement(const ClusterState&, const Task&, HostId) { return false; }
  virtual PredictionOutcome on_job_complete(const ClusterState&, const Job&) { return {}; }
};

// ---- START -----------------------------------------------------------------

// Mitigation step once the prediction is known: when at most `mitigate_count`
// tasks are unfinished, speculate (deadline-driven job) or re-run each running
// one that has not been handled yet, up to the budget.
Actions start_actions(const ClusterState& state, const Job& job, int mitigate_count, int already_mitigated);

struct JobRecord {
  pareto::Params predicted;
  std::vector<double> response_times;
};

// F1 of "the floor(E_S) slowest tasks" against "tasks slower than K of the job's own fit".
struct Confusion {
  int tp = 0, fp = 0, fn = 0;
};
Confusion straggler_confusion(const pareto::Params& predicted, std::span<const double> response_times, double k,
                              double alpha_max);

// Picks the k from `grid` with the best F1 over finished jobs; keeps `current` on ties or no signal.
double adapt_k(std::span<const JobRecord> history, std::span<const double> grid, double current, double alpha_max,
               bool f1_as_printed);

inline const std::vector<double>& default_k_grid() {
  static const std::vector<double> grid{1.0, 1.25, 1.5, 1.75, 2.0};
  return grid;
}

struct StartSettings {
  predictor::WindowSettings window;
  double k = 1.5;
  bool adapt_k = true;
  int adapt_period = 50;
  double observe_interval = 1;
  double time_unit = 300;
  double alpha_label_max = 10;
  bool f1_as_printed = false;
};

class StartPolicy : public Policy {
 public:
  StartPolicy(std::shared_ptr<const neural::Network> net, StartSettings settings);

  std::string name() const override { return "start"; }
  std::vector<double> observation_offsets() const override;
  void on_job_arrival(const ClusterState& state, const Job& job) override;
  Actions on_observe(const ClusterState& state, const Job& job) override;
  Actions on_job_progress(const ClusterState& state, const Job& job) override;
  Actions on_interval(const ClusterState& state) override;
  PredictionOutcome on_job_complete(const ClusterState& state, const Job& job) override;

  double current_k() const { return k_; }
  // Largest E_S seen so far, for the no-op property check.
  double max_expected() const { return max_expected_; }
  std::optional<pareto::StragglerEstimate> estimate(JobId job) const;

 private:
  struct JobPlan {
    pareto::Params params;
    pareto::StragglerEstimate estimate;
  };

  Actions mitigate(const ClusterState& state, const Job& job);

  std::shared_ptr<const neural::Network> net_;
  StartSettings settings_;
  double k_;
  double max_expected_ = 0;
  std::map<JobId, predictor::PredictionWindow> windows_;
  std::map<JobId, JobPlan> plans_;
  std::vector<JobRecord> history_;
  int last_adapted_interval_ = 0;
};

// ---- baselines ---------------------------------------------------------------

class NonePolicy : public Policy {
 public:
  std::string name() const override { return "none"; }
};

// Speculates a task once its running time exceeds `factor` times the median
// response of at least two finished siblings.
class ReactivePolicy : public Policy {
 public:
  explicit ReactivePolicy(double factor) : factor_(factor) {}
  std::string name() const override { return "reactive"; }
  Actions on_job_progress(const ClusterState& state, const Job& job) override;
  Actions on_interval(const ClusterState& state) override;

  Actions check_job(const ClusterState& state, const Job& job);

 private:
  double factor_;
  std::set<TaskId> handled_;
};

// Fit of execution time = a + b * length^c.
struct PowerFit {
  double a = 0, b = 0, c = 0;
  double operator()(double x) const;
};

// Log-space least squares for (b, c) given a, with a chosen to minimise the
// squared residual over [0, min(y)). Nothing for fewer than three points,
// constant inputs, or a near-zero exponent.
std::optional<PowerFit> fit_power_law(std::span<const double> x, std::span<const double> y);

class NearestFitPolicy : public Policy {
 public:
  explicit NearestFitPolicy(double factor) : factor_(factor) {}
  std::string name() const override { return "nearestfit"; }
  Actions on_interval(const ClusterState& state) override;

 private:
  double factor_;
  std::vector<double> lengths_;
  std::vector<double> exec_times_;
  std::set<TaskId> recorded_;
  std::set<TaskId> handled_;
};

// Clone-at-launch with a budget measured in MI (capacity-seconds).
double dolly_budget(const std::vector<Host>& hosts, double fraction, double horizon_seconds);

class DollyPolicy : public Policy {
 public:
  explicit DollyPolicy(double budget_mi) : budget_(budget_mi) {}
  std::string name() const override { return "dolly"; }
  Actions on_task_placed(const ClusterState& state, const Task& task) override;
  double spent() const { return spent_; }

 private:
  double budget_;
  double spent_ = 0;
  std::set<TaskId> cloned_;
};

class WranglerPolicy : public Policy {
 public:
  WranglerPolicy(double threshold, int max_delays) : threshold_(threshold), max_delays_(max_delays) {}
  std::string name() const override { return "wrangler"; }
  bool delay_placement(const ClusterState& state, const Task& task, HostId host) override;

  static double confidence(const ClusterState& state, HostId host);

 private:
  double threshold_;
  int max_delays_;
};

// Captures prediction windows and labels for training; takes no actions.
class HarvestPolicy : public Policy {
 public:
  HarvestPolicy(predictor::WindowSettings settings, double observe_interval, double alpha_max)
      : settings_(std::move(settings)), observe_interval_(observe_interval), alpha_max_(alpha_max) {}
  std::string name() const override { return "harvest"; }
  std::vector<double> observation_offsets() const override;
  void on_job_arrival(const ClusterState& state, const Job& job) override;
  Actions on_observe(const ClusterState& state, const Job& job) override;
  PredictionOutcome on_job_complete(const ClusterState& state, const Job& job) override;

  std::vector<predictor::TrainingExample> take_examples() { return std::move(examples_); }
  int discarded() const { return discarded_; }

 private:
  predictor::WindowSettings settings_;
  double observe_interval_;
  double alpha_max_;
  std::map<JobId, predictor::PredictionWindow> windows_;
  std::vector<predictor::TrainingExample> examples_;
  int discarded_ = 0;
};

// Builds the policy named in the config. START needs a network.
std::unique_ptr<Policy> make_policy(const SimConfig& config, const std::vector<Host>& fleet,
                                    std::shared_ptr<const neural::Network> net);

predictor::WindowSettings window_settings(const SimConfig& config, const std::vector<Host>& fleet);

}  // namespace straggler::mitigation
