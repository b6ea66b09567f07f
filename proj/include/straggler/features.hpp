#pragma once

#include <Eigen/Dense>

#include "straggler/types.hpp"

namespace straggler {

inline constexpr int kHostFeatures = 12;
inline constexpr int kTaskFeatures = 5;

// Fleet-wide maxima used to bring every feature into [0, 1].
struct FeatureScales {
  double cpu = 1;
  double ram = 1;
  double disk = 1;
  double bw = 1;
  double cost = 1;
  double power_min = 1;
  double power_max = 1;
  double task_count = 16;

  static FeatureScales from_fleet(const std::vector<Host>& hosts, int max_tasks_per_host);
};

// Row order: cpu_util, cpu_cap, ram_util, ram_cap, disk_util, disk_cap, bw_util, bw_cap,
// cost, power_min, power_max, task_count. Offline hosts are zero rows.
Eigen::MatrixXd extract_host_features(const ClusterState& state, const FeatureScales& scales);

// Rows beyond the job's task count are zero. Columns: cpu, ram, disk, bw, prev_host.
Eigen::MatrixXd extract_task_features(const ClusterState& state, JobId job, int max_tasks,
                                      const FeatureScales& scales);

/// Running average with `weight` on the fresh matrix. A null previous state
/// means first observation, which returns `fresh` as is.
Eigen::MatrixXd ema_update(const Eigen::MatrixXd* ema_state, const Eigen::MatrixXd& fresh,
                           double weight);

// Host matrix first, each row-major.
Eigen::VectorXd flatten_features(const Eigen::MatrixXd& host_features,
                                 const Eigen::MatrixXd& task_features);

inline int feature_width(int n_hosts, int max_tasks) {
  return kHostFeatures * n_hosts + kTaskFeatures * max_tasks;
}

}  // namespace straggler
