#include "straggler/features.hpp"

#include <algorithm>

namespace straggler {

namespace {

double ratio(double value, double scale) {
  if (scale <= 0) return 0;
  return std::clamp(value / scale, 0.0, 1.0);
}

}  // namespace

FeatureScales FeatureScales::from_fleet(const std::vector<Host>& hosts, int max_tasks_per_host) {
  FeatureScales s;
  s.cpu = s.ram = s.disk = s.bw = s.cost = s.power_min = s.power_max = 0;
  for (const auto& h : hosts) {
    s.cpu = std::max(s.cpu, h.cpu_capacity);
    s.ram = std::max(s.ram, h.ram_capacity);
    s.disk = std::max(s.disk, h.disk_capacity);
    s.bw = std::max(s.bw, h.bw_capacity);
    s.cost = std::max(s.cost, h.cost_per_interval);
    s.power_min = std::max(s.power_min, h.power_min);
    s.power_max = std::max(s.power_max, h.power_max);
  }
  s.task_count = std::max(1, max_tasks_per_host);
  return s;
}

Eigen::MatrixXd extract_host_features(const ClusterState& state, const FeatureScales& scales) {
  const auto n = static_cast<Eigen::Index>(state.hosts.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, kHostFeatures);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Host& h = state.hosts[static_cast<std::size_t>(k)];
    if (!h.online) continue;
    m(k, 0) = ratio(h.cpu_used, h.cpu_capacity);
    m(k, 1) = ratio(h.cpu_capacity, scales.cpu);
    m(k, 2) = ratio(h.ram_used, h.ram_capacity);
    m(k, 3) = ratio(h.ram_capacity, scales.ram);
    m(k, 4) = ratio(h.disk_used, h.disk_capacity);
    m(k, 5) = ratio(h.disk_capacity, scales.disk);
    m(k, 6) = ratio(h.bw_used, h.bw_capacity);
    m(k, 7) = ratio(h.bw_capacity, scales.bw);
    m(k, 8) = ratio(h.cost_per_interval, scales.cost);
    m(k, 9) = ratio(h.power_min, scales.power_min);
    m(k, 10) = ratio(h.power_max, scales.power_max);
    m(k, 11) = ratio(h.active_task_count, scales.task_count);
  }
  return m;
}

Eigen::MatrixXd extract_task_features(const ClusterState& state, JobId job_id, int max_tasks,
                                      const FeatureScales& scales) {
  const Job& job = state.job(job_id);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(max_tasks, kTaskFeatures);
  const double n = static_cast<double>(state.hosts.size());
  const auto rows = std::min<std::size_t>(job.tasks.size(), static_cast<std::size_t>(max_tasks));
  for (std::size_t a = 0; a < rows; ++a) {
    const Task& t = state.task(job.tasks[a]);
    const auto r = static_cast<Eigen::Index>(a);
    m(r, 0) = ratio(t.cpu_req, scales.cpu);
    m(r, 1) = ratio(t.ram_req, scales.ram);
    m(r, 2) = ratio(t.disk_req, scales.disk);
    m(r, 3) = ratio(t.bw_req, scales.bw);
    const HostId where = t.assigned_host != kNoHost ? t.assigned_host : t.prev_host;
    m(r, 4) = where == kNoHost ? 0.0 : (static_cast<double>(where) + 1.0) / (n + 1.0);
  }
  return m;
}

Eigen::MatrixXd ema_update(const Eigen::MatrixXd* ema_state, const Eigen::MatrixXd& fresh,
                           double weight) {
  if (!(weight > 0.0 && weight <= 1.0)) throw std::invalid_argument("ema weight must be in (0, 1]");
  if (ema_state == nullptr) return fresh;
  if (ema_state->rows() != fresh.rows() || ema_state->cols() != fresh.cols())
    throw std::invalid_argument("ema_update: shape mismatch");
  return weight * fresh + (1.0 - weight) * (*ema_state);
}

Eigen::VectorXd flatten_features(const Eigen::MatrixXd& host_features,
                                 const Eigen::MatrixXd& task_features) {
  Eigen::VectorXd out(host_features.size() + task_features.size());
  Eigen::Index i = 0;
  for (Eigen::Index r = 0; r < host_features.rows(); ++r)
    for (Eigen::Index c = 0; c < host_features.cols(); ++c) out(i++) = host_features(r, c);
  for (Eigen::Index r = 0; r < task_features.rows(); ++r)
    for (Eigen::Index c = 0; c < task_features.cols(); ++c) out(i++) = task_features(r, c);
  return out;
}

}  // namespace straggler
