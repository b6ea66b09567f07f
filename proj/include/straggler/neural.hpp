#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "straggler/pareto.hpp"

namespace straggler::neural {

double softplus(double x);
double sigmoid(double x);

struct Shape {
  int input = 0;
  std::vector<int> encoder{128, 128, 32};
  int lstm_hidden = 32;
  int lstm_layers = 2;

  bool operator==(const Shape&) const = default;
};

struct LstmState {
  std::vector<Eigen::VectorXd> h;
  std::vector<Eigen::VectorXd> c;

  static LstmState zeros(const Shape& shape);
};

// Flat list of parameter tensors in canonical order:
// encoder (w, b) per layer, lstm (w_in, w_rec, b) per layer, head (w, b).
// Biases are single-column matrices. Gate blocks are stacked input, forget,
// candidate, output.
struct Tensors {
  std::vector<Eigen::MatrixXd> t;

  Tensors zeros_like() const;
  std::size_t scalar_count() const;
  bool all_finite() const;
  void scale(double f);
  void add(const Tensors& other);
};

using Gradients = Tensors;

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Network {
 public:
  Network() = default;
  Network(Shape shape, std::uint64_t seed);

  const Shape& shape() const { return shape_; }
  const Tensors& params() const { return params_; }
  Tensors& params() { return params_; }
  const Tensors& adam_m() const { return adam_m_; }
  const Tensors& adam_v() const { return adam_v_; }
  std::uint64_t step_count() const { return step_count_; }

  Eigen::VectorXd encoder_forward(const Eigen::VectorXd& input) const;
  std::pair<LstmState, Eigen::VectorXd> lstm_step(const LstmState& state,
                                                  const Eigen::VectorXd& input) const;
  Eigen::Vector2d head_raw(const Eigen::VectorXd& h) const;
  pareto::Params head_forward(const Eigen::VectorXd& h) const;

  // Full window: encoder, LSTM recursion from zero state, head on the last hidden state.
  pareto::Params predict(std::span<const Eigen::VectorXd> sequence) const;

  // 0.5 * ((alpha - a*)^2 + (beta - b*)^2), the mean over the two outputs.
  double loss(std::span<const Eigen::VectorXd> sequence, const pareto::Params& target) const;

  // Exact gradient of loss() by backpropagation through time.
  Gradients backward(std::span<const Eigen::VectorXd> sequence, const pareto::Params& target,
                     double* loss_out = nullptr) const;

  void adam_step(const Gradients& grads, double lr);

  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static Network load(std::istream& in);
  static Network load(const std::filesystem::path& path);

  bool operator==(const Network& other) const;

  // Canonical tensor positions.
  std::size_t enc_w(std::size_t layer) const { return 2 * layer; }
  std::size_t enc_b(std::size_t layer) const { return 2 * layer + 1; }
  std::size_t lstm_w_in(std::size_t layer) const { return 2 * shape_.encoder.size() + 3 * layer; }
  std::size_t lstm_w_rec(std::size_t layer) const { return lstm_w_in(layer) + 1; }
  std::size_t lstm_b(std::size_t layer) const { return lstm_w_in(layer) + 2; }
  std::size_t head_w() const { return lstm_w_in(static_cast<std::size_t>(shape_.lstm_layers)); }
  std::size_t head_b() const { return head_w() + 1; }

 private:
  struct StepCache;

  Shape shape_;
  Tensors params_;
  Tensors adam_m_;
  Tensors adam_v_;
  std::uint64_t step_count_ = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

}  // namespace straggler::neural
