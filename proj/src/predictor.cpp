#include "straggler/predictor.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace straggler::predictor {

PredictionWindow open_window(JobId job, const WindowSettings& settings, const neural::Network* net) {
  PredictionWindow w;
  w.job_id = job;
  w.capacity = settings.capacity;
  if (net != nullptr) w.lstm_state = neural::LstmState::zeros(net->shape());
  return w;
}

void observe(PredictionWindow& window, const ClusterState& state, const WindowSettings& settings,
             const neural::Network* net) {
  if (window.complete()) throw std::logic_error("observe: window already complete");
  const Eigen::MatrixXd hosts = extract_host_features(state, settings.scales);
  const Eigen::MatrixXd tasks = extract_task_features(state, window.job_id, settings.max_tasks, settings.scales);
  window.ema_hosts = ema_update(window.ema_hosts ? &*window.ema_hosts : nullptr, hosts, settings.ema_weight);
  window.ema_tasks = ema_update(window.ema_tasks ? &*window.ema_tasks : nullptr, tasks, settings.ema_weight);
  window.observations.push_back(flatten_features(*window.ema_hosts, *window.ema_tasks));
  if (net != nullptr) {
    auto [next, top] = net->lstm_step(window.lstm_state, net->encoder_forward(window.observations.back()));
    window.lstm_state = std::move(next);
    window.top = std::move(top);
  }
}

pareto::Params predict_params(const PredictionWindow& window, const neural::Network& net, double time_unit) {
  if (!window.complete()) throw std::logic_error("predict_params: window incomplete");
  pareto::Params p = net.head_forward(window.top);
  p = pareto::clamp_for_use(p);
  p.beta *= time_unit;
  return p;
}

std::optional<pareto::Params> label_from_times(std::span<const double> response_times, double alpha_max) {
  if (response_times.size() < 2) return std::nullopt;
  try {
    pareto::Params p = pareto::fit_mle(response_times);
    p.alpha = std::clamp(p.alpha, 1.0 + 1e-6, alpha_max);
    return p;
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

std::optional<pareto::Params> make_label(const ClusterState& state, const Job& job, double alpha_max) {
  std::vector<double> times;
  for (TaskId id : job.tasks) {
    const Task& t = state.task(id);
    if (t.state != TaskState::completed || !t.completion_time) return std::nullopt;
    times.push_back(*t.completion_time - t.submit_time);
  }
  return label_from_times(times, alpha_max);
}

Split split_dataset(std::size_t n, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, std::min<std::size_t>(n, 1), n);
  Split s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  return s;
}

namespace {

pareto::Params scaled_target(const pareto::Params& p, double time_unit) { return {p.alpha, p.beta / time_unit}; }

}  // namespace

double mean_loss(const neural::Network& net, std::span<const TrainingExample> dataset,
                 std::span<const std::size_t> index, double time_unit) {
  if (index.empty()) return 0.0;
  double sum = 0;
  for (std::size_t i : index) sum += net.loss(dataset[i].input_sequence, scaled_target(dataset[i].target, time_unit));
  return sum / static_cast<double>(index.size());
}

TrainResult train(neural::Network& net, std::span<const TrainingExample> dataset, const TrainOptions& options) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  if (!(options.split > 0 && options.split < 1)) throw std::invalid_argument("train: split must be in (0, 1)");
  const Split split = split_dataset(dataset.size(), options.split, options.seed);
  TrainResult result;
  result.train_index = split.train;
  result.test_index = split.test;
  std::mt19937_64 rng(options.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order = split.train;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const auto grads = net.backward(dataset[i].input_sequence, scaled_target(dataset[i].target, options.time_unit));
      net.adam_step(grads, options.lr);
    }
    result.train_loss.push_back(mean_loss(net, dataset, split.train, options.time_unit));
    result.test_loss.push_back(mean_loss(net, dataset, split.test, options.time_unit));
  }
  return result;
}

void write_dataset(const std::filesystem::path& features_csv, const std::filesystem::path& labels_csv,
                   std::span<const TrainingExample> dataset) {
  std::ofstream f(features_csv, std::ios::binary | std::ios::trunc);
  std::ofstream l(labels_csv, std::ios::binary | std::ios::trunc);
  if (!f || !l) throw std::runtime_error("cannot write dataset files");
  const Eigen::Index width = dataset.empty() ? 0 : dataset.front().input_sequence.front().size();
  f << "example_id,step_index";
  for (Eigen::Index k = 0; k < width; ++k) f << ",f" << k;
  f << '\n';
  l << "example_id,alpha,beta,interval,response_times\n";
  for (std::size_t e = 0; e < dataset.size(); ++e) {
    const auto& ex = dataset[e];
    for (std::size_t s = 0; s < ex.input_sequence.size(); ++s) {
      f << e << ',' << s;
      for (Eigen::Index k = 0; k < ex.input_sequence[s].size(); ++k) f << ',' << fmt::format("{}", ex.input_sequence[s](k));
      f << '\n';
    }
    l << fmt::format("{},{},{},{},{}\n", e, ex.target.alpha, ex.target.beta, ex.interval,
                     fmt::join(ex.response_times, ";"));
  }
}

std::vector<TrainingExample> read_dataset(const std::filesystem::path& features_csv,
                                          const std::filesystem::path& labels_csv) {
  std::ifstream f(features_csv, std::ios::binary);
  std::ifstream l(labels_csv, std::ios::binary);
  if (!f || !l) throw std::runtime_error("cannot read dataset files");
  auto cells_of = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  std::string line;
  std::getline(l, line);
  std::map<std::size_t, TrainingExample> examples;
  while (std::getline(l, line)) {
    if (line.empty()) continue;
    const auto c = cells_of(line);
    if (c.size() != 4 && c.size() != 5) throw std::runtime_error("labels csv: expected 5 columns");
    auto& ex = examples[std::stoull(c[0])];
    ex.target = {std::stod(c[1]), std::stod(c[2])};
    ex.interval = std::stoll(c[3]);
    if (c.size() == 5) {
      std::stringstream times(c[4]);
      std::string cell;
      while (std::getline(times, cell, ';'))
        if (!cell.empty()) ex.response_times.push_back(std::stod(cell));
    }
  }
  std::getline(f, line);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto c = cells_of(line);
    if (c.size() < 3) throw std::runtime_error("features csv: too few columns");
    auto it = examples.find(std::stoull(c[0]));
    if (it == examples.end()) throw std::runtime_error("features csv: example without label");
    Eigen::VectorXd v(static_cast<Eigen::Index>(c.size() - 2));
    for (std::size_t k = 2; k < c.size(); ++k) v(static_cast<Eigen::Index>(k - 2)) = std::stod(c[k]);
    const auto step = std::stoull(c[1]);
    if (step != it->second.input_sequence.size()) throw std::runtime_error("features csv: steps out of order");
    it->second.input_sequence.push_back(std::move(v));
  }
  std::vector<TrainingExample> out;
  for (auto& [id, ex] : examples) out.push_back(std::move(ex));
  return out;
}

}  // namespace straggler::predictor
