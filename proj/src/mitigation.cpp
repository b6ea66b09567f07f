#include "straggler/mitigation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "straggler/metrics.hpp"

namespace straggler::mitigation {

std::optional<HostId> try_select_node(const ClusterState& state, HostId exclude, const Task* task) {
  std::optional<HostId> best;
  double best_ema = 0;
  for (const Host& h : state.hosts) {
    if (!h.online || h.id == exclude) continue;
    if (task != nullptr && (!h.fits(task->ram_req, task->disk_req) || h.cpu_demand + task->cpu_req > h.cpu_capacity))
      continue;
    const auto idx = static_cast<std::size_t>(h.id);
    const double ema = idx < state.straggler_ema_per_host.size() ? state.straggler_ema_per_host[idx] : 0.0;
    if (!best || ema < best_ema) {
      best = h.id;
      best_ema = ema;
    }
  }
  return best;
}

HostId select_node(const ClusterState& state, HostId exclude, const Task* task) {
  if (auto h = try_select_node(state, exclude, task)) return *h;
  throw NoCandidateHost("select_node: no online host other than the excluded one");
}

// ---- START -----------------------------------------------------------------

Actions start_actions(const ClusterState& state, const Job& job, int mitigate_count, int already_mitigated) {
  Actions out;
  if (mitigate_count <= 0 || job.remaining() > mitigate_count) return out;
  int budget = mitigate_count - already_mitigated;
  for (TaskId id : job.tasks) {
    if (budget <= 0) break;
    const Task& t = state.task(id);
    if (t.finished() || t.mitigated || t.copies.size() != 1) continue;
    const auto target = try_select_node(state, t.assigned_host, &t);
    if (!target) continue;
    out.push_back({job.deadline_driven ? ActionKind::speculate : ActionKind::rerun, id, *target});
    --budget;
  }
  return out;
}

Confusion straggler_confusion(const pareto::Params& predicted, std::span<const double> response_times, double k,
                              double alpha_max) {
  Confusion c;
  const auto fit = predictor::label_from_times(response_times, alpha_max);
  if (!fit) return c;
  const auto actual = pareto::classify_stragglers(response_times, pareto::straggler_threshold(*fit, k));
  const int q = static_cast<int>(response_times.size());
  const int m = pareto::expected_stragglers(predicted, q, k).mitigate_count;
  std::vector<std::size_t> order(response_times.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return response_times[a] > response_times[b]; });
  std::vector<bool> flagged(response_times.size(), false);
  for (int i = 0; i < m; ++i) flagged[order[static_cast<std::size_t>(i)]] = true;
  for (std::size_t i = 0; i < response_times.size(); ++i) {
    if (flagged[i] && actual[i]) ++c.tp;
    if (flagged[i] && !actual[i]) ++c.fp;
    if (!flagged[i] && actual[i]) ++c.fn;
  }
  return c;
}

double adapt_k(std::span<const JobRecord> history, std::span<const double> grid, double current, double alpha_max,
               bool f1_as_printed) {
  auto f1_for = [&](double k) -> std::optional<double> {
    Confusion total;
    for (const auto& rec : history) {
      const Confusion c = straggler_confusion(rec.predicted, rec.response_times, k, alpha_max);
      total.tp += c.tp;
      total.fp += c.fp;
      total.fn += c.fn;
    }
    if (total.tp + total.fp + total.fn == 0) return std::nullopt;
    return metrics::f1_score(total.tp, total.fp, total.fn, f1_as_printed);
  };
  double best_k = current;
  double best_f1 = f1_for(current).value_or(-1.0);
  for (double k : grid) {
    const auto f1 = f1_for(k);
    if (f1 && *f1 > best_f1) {
      best_f1 = *f1;
      best_k = k;
    }
  }
  return best_k;
}

StartPolicy::StartPolicy(std::shared_ptr<const neural::Network> net, StartSettings settings)
    : net_(std::move(net)), settings_(std::move(settings)), k_(settings_.k) {
  if (!net_) throw std::invalid_argument("start policy needs a trained network");
}

std::vector<double> StartPolicy::observation_offsets() const {
  std::vector<double> out;
  for (int i = 1; i <= settings_.window.capacity; ++i) out.push_back(settings_.observe_interval * i);
  return out;
}

void StartPolicy::on_job_arrival(const ClusterState&, const Job& job) {
  windows_.insert_or_assign(job.id, predictor::open_window(job.id, settings_.window, net_.get()));
}

Actions StartPolicy::on_observe(const ClusterState& state, const Job& job) {
  auto it = windows_.find(job.id);
  if (it == windows_.end()) return {};
  predictor::observe(it->second, state, settings_.window, net_.get());
  if (!it->second.complete()) return {};
  const pareto::Params params = predictor::predict_params(it->second, *net_, settings_.time_unit);
  windows_.erase(it);
  const auto est = pareto::expected_stragglers(params, static_cast<int>(job.tasks.size()), k_);
  max_expected_ = std::max(max_expected_, est.expected);
  plans_[job.id] = {params, est};
  if (job.completion_time) return {};
  return mitigate(state, job);
}

std::optional<pareto::StragglerEstimate> StartPolicy::estimate(JobId job) const {
  auto it = plans_.find(job);
  if (it == plans_.end()) return std::nullopt;
  return it->second.estimate;
}

Actions StartPolicy::mitigate(const ClusterState& state, const Job& job) {
  auto it = plans_.find(job.id);
  if (it == plans_.end()) return {};
  int done = 0;
  for (TaskId id : job.tasks) done += state.task(id).mitigated ? 1 : 0;
  return start_actions(state, job, it->second.estimate.mitigate_count, done);
}

Actions StartPolicy::on_job_progress(const ClusterState& state, const Job& job) { return mitigate(state, job); }

Actions StartPolicy::on_interval(const ClusterState& state) {
  if (settings_.adapt_k && settings_.adapt_period > 0 &&
      state.interval_index - last_adapted_interval_ >= settings_.adapt_period) {
    last_adapted_interval_ = state.interval_index;
    k_ = adapt_k(history_, default_k_grid(), k_, settings_.alpha_label_max, settings_.f1_as_printed);
  }
  Actions out;
  for (const auto& [id, plan] : plans_) {
    const Job& job = state.job(id);
    if (job.completion_time) continue;
    auto more = mitigate(state, job);
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

PredictionOutcome StartPolicy::on_job_complete(const ClusterState& state, const Job& job) {
  windows_.erase(job.id);
  auto it = plans_.find(job.id);
  if (it == plans_.end()) return {};
  const pareto::Params predicted = it->second.params;
  const double expected = it->second.estimate.expected;
  plans_.erase(it);

  std::vector<double> times;
  for (TaskId id : job.tasks) {
    const Task& t = state.task(id);
    if (!t.completion_time) return {};
    times.push_back(*t.completion_time - t.submit_time);
  }
  const auto fit = predictor::label_from_times(times, settings_.alpha_label_max);
  if (!fit) return {};
  PredictionOutcome out;
  out.has_prediction = true;
  out.predicted = expected;
  const auto flags = pareto::classify_stragglers(times, pareto::straggler_threshold(*fit, k_));
  out.actual = static_cast<double>(std::count(flags.begin(), flags.end(), true));
  const Confusion c = straggler_confusion(predicted, times, k_, settings_.alpha_label_max);
  out.tp = c.tp;
  out.fp = c.fp;
  out.fn = c.fn;
  history_.push_back({predicted, std::move(times)});
  return out;
}

// ---- reactive ----------------------------------------------------------------

Actions ReactivePolicy::check_job(const ClusterState& state, const Job& job) {
  std::vector<double> finished;
  for (TaskId id : job.tasks) {
    const Task& t = state.task(id);
    if (t.state == TaskState::completed && t.completion_time) finished.push_back(*t.completion_time - t.submit_time);
  }
  if (finished.size() < 2) return {};
  std::sort(finished.begin(), finished.end());
  const std::size_t n = finished.size();
  const double median = n % 2 == 1 ? finished[n / 2] : 0.5 * (finished[n / 2 - 1] + finished[n / 2]);
  Actions out;
  for (TaskId id : job.tasks) {
    const Task& t = state.task(id);
    if (t.finished() || t.copies.size() != 1 || !t.start_time || handled_.contains(id)) continue;
    if (state.now - *t.start_time <= factor_ * median) continue;
    const auto target = try_select_node(state, t.assigned_host, &t);
    if (!target) continue;
    handled_.insert(id);
    out.push_back({ActionKind::speculate, id, *target});
  }
  return out;
}

Actions ReactivePolicy::on_job_progress(const ClusterState& state, const Job& job) { return check_job(state, job); }

Actions ReactivePolicy::on_interval(const ClusterState& state) {
  Actions out;
  for (const auto& [id, job] : state.jobs) {
    if (job.completion_time) continue;
    auto more = check_job(state, job);
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

// ---- NearestFit ----------------------------------------------------------------

double PowerFit::operator()(double x) const { return a + b * std::pow(x, c); }

namespace {

struct LogFit {
  double b = 0, c = 0;
  bool ok = false;
};

LogFit log_space_fit(std::span<const double> x, std::span<const double> y, double a) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i] - a);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (!(std::abs(denom) > 1e-12 * std::max(1.0, n * sxx))) return {};
  LogFit f;
  f.c = (n * sxy - sx * sy) / denom;
  f.b = std::exp((sy - f.c * sx) / n);
  f.ok = std::isfinite(f.b) && std::isfinite(f.c);
  return f;
}

double sse(std::span<const double> x, std::span<const double> y, const PowerFit& f) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = f(x[i]) - y[i];
    s += r * r;
  }
  return s;
}

}  // namespace

std::optional<PowerFit> fit_power_law(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) return std::nullopt;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] > 0) || !(y[i] > 0)) return std::nullopt;
  const double y_min = *std::min_element(y.begin(), y.end());
  auto cost = [&](double a) {
    const LogFit lf = log_space_fit(x, y, a);
    if (!lf.ok) return std::numeric_limits<double>::infinity();
    return sse(x, y, {a, lf.b, lf.c});
  };
  const double phi = (std::sqrt(5.0) - 1) / 2;
  double lo = 0, hi = y_min * (1 - 1e-9);
  double m1 = hi - phi * (hi - lo), m2 = lo + phi * (hi - lo);
  double f1 = cost(m1), f2 = cost(m2);
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, y_min); ++it) {
    if (f1 <= f2) {
      hi = m2;
      m2 = m1;
      f2 = f1;
      m1 = hi - phi * (hi - lo);
      f1 = cost(m1);
    } else {
      lo = m1;
      m1 = m2;
      f1 = f2;
      m2 = lo + phi * (hi - lo);
      f2 = cost(m2);
    }
  }
  double a = 0.5 * (lo + hi);
  if (cost(0.0) <= cost(a)) a = 0.0;
  const LogFit lf = log_space_fit(x, y, a);
  if (!lf.ok || std::abs(lf.c) < 1e-3) return std::nullopt;
  return PowerFit{a, lf.b, lf.c};
}

Actions NearestFitPolicy::on_interval(const ClusterState& state) {
  for (const auto& [id, t] : state.tasks) {
    if (t.state != TaskState::completed || !t.completion_time || !t.start_time || recorded_.contains(id)) continue;
    recorded_.insert(id);
    lengths_.push_back(t.length);
    exec_times_.push_back(*t.completion_time - *t.start_time);
  }
  const auto fit = fit_power_law(lengths_, exec_times_);
  if (!fit) return {};
  Actions out;
  for (const auto& [jid, job] : state.jobs) {
    if (job.completion_time) continue;
    double mean = 0;
    for (TaskId id : job.tasks) mean += (*fit)(state.task(id).length);
    mean /= static_cast<double>(job.tasks.size());
    for (TaskId id : job.tasks) {
      const Task& t = state.task(id);
      if (t.finished() || t.copies.size() != 1 || handled_.contains(id)) continue;
      const double rate = t.copies.front().rate;
      if (!(rate > 0)) continue;
      const double predicted = (*fit)(t.length) * (t.cpu_req / rate);
      if (predicted <= factor_ * mean) continue;
      const auto target = try_select_node(state, t.assigned_host, &t);
      if (!target) continue;
      handled_.insert(id);
      out.push_back({ActionKind::speculate, id, *target});
    }
  }
  return out;
}

// ---- Dolly ---------------------------------------------------------------------

double dolly_budget(const std::vector<Host>& hosts, double fraction, double horizon_seconds) {
  double cap = 0;
  for (const Host& h : hosts) cap += h.cpu_capacity;
  return fraction * cap * horizon_seconds;
}

Actions DollyPolicy::on_task_placed(const ClusterState& state, const Task& task) {
  if (cloned_.contains(task.id) || task.copies.size() != 1) return {};
  if (spent_ + task.length > budget_) return {};
  const auto target = try_select_node(state, task.assigned_host, &task);
  if (!target) return {};
  cloned_.insert(task.id);
  spent_ += task.length;
  return {{ActionKind::clone, task.id, *target}};
}

// ---- Wrangler ------------------------------------------------------------------

double WranglerPolicy::confidence(const ClusterState& state, HostId host) {
  const auto& ema = state.straggler_ema_per_host;
  if (ema.empty()) return 0;
  const double peak = *std::max_element(ema.begin(), ema.end());
  if (!(peak > 0)) return 0;
  return ema.at(static_cast<std::size_t>(host)) / peak;
}

bool WranglerPolicy::delay_placement(const ClusterState& state, const Task& task, HostId host) {
  if (task.delays >= max_delays_) return false;
  return confidence(state, host) > threshold_;
}

// ---- harvest -------------------------------------------------------------------

std::vector<double> HarvestPolicy::observation_offsets() const {
  std::vector<double> out;
  for (int i = 1; i <= settings_.capacity; ++i) out.push_back(observe_interval_ * i);
  return out;
}

void HarvestPolicy::on_job_arrival(const ClusterState&, const Job& job) {
  windows_.insert_or_assign(job.id, predictor::open_window(job.id, settings_, nullptr));
}

Actions HarvestPolicy::on_observe(const ClusterState& state, const Job& job) {
  auto it = windows_.find(job.id);
  if (it != windows_.end() && !it->second.complete()) predictor::observe(it->second, state, settings_, nullptr);
  return {};
}

PredictionOutcome HarvestPolicy::on_job_complete(const ClusterState& state, const Job& job) {
  auto it = windows_.find(job.id);
  if (it == windows_.end()) return {};
  const auto label = it->second.complete() ? predictor::make_label(state, job, alpha_max_) : std::nullopt;
  if (label) {
    std::vector<double> times;
    for (TaskId id : job.tasks) times.push_back(*state.task(id).completion_time - state.task(id).submit_time);
    examples_.push_back({std::move(it->second.observations), *label, std::move(times), state.interval_index});
  } else {
    ++discarded_;
  }
  windows_.erase(it);
  return {};
}

// ---- factory -------------------------------------------------------------------

predictor::WindowSettings window_settings(const SimConfig& config, const std::vector<Host>& fleet) {
  predictor::WindowSettings s;
  s.scales = FeatureScales::from_fleet(fleet, config.fleet.max_tasks_per_host);
  s.max_tasks = config.workload.max_tasks;
  s.ema_weight = config.predictor.ema_weight;
  s.capacity = config.predictor.window_steps();
  return s;
}

std::unique_ptr<Policy> make_policy(const SimConfig& config, const std::vector<Host>& fleet,
                                    std::shared_ptr<const neural::Network> net) {
  const auto& m = config.mitigation;
  switch (config.policy) {
    case PolicyId::start: {
      StartSettings s;
      s.window = window_settings(config, fleet);
      s.k = config.predictor.k;
      s.adapt_k = config.predictor.adapt_k;
      s.adapt_period = config.predictor.k_adapt_period;
      s.observe_interval = config.predictor.observe_interval;
      s.time_unit = config.interval_seconds;
      s.alpha_label_max = config.predictor.alpha_label_max;
      s.f1_as_printed = config.metrics.f1_as_printed;
      return std::make_unique<StartPolicy>(std::move(net), std::move(s));
    }
    case PolicyId::none:
      return std::make_unique<NonePolicy>();
    case PolicyId::reactive:
      return std::make_unique<ReactivePolicy>(m.reactive_factor);
    case PolicyId::nearestfit:
      return std::make_unique<NearestFitPolicy>(m.nearestfit_factor);
    case PolicyId::dolly:
      return std::make_unique<DollyPolicy>(
          dolly_budget(fleet, m.dolly_budget, config.horizon_intervals * config.interval_seconds));
    case PolicyId::wrangler:
      return std::make_unique<WranglerPolicy>(m.wrangler_threshold, m.wrangler_max_delays);
  }
  throw std::invalid_argument("unknown policy");
}

}  // namespace straggler::mitigation
