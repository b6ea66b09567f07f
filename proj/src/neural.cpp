#include "straggler/neural.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <random>
#include <string>

namespace straggler::neural {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

Eigen::VectorXd softplus(const Eigen::VectorXd& z) {
  return z.unaryExpr([](double v) { return neural::softplus(v); });
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& z) {
  return z.unaryExpr([](double v) { return neural::sigmoid(v); });
}

Eigen::VectorXd tanh(const Eigen::VectorXd& z) {
  return z.unaryExpr([](double v) { return std::tanh(v); });
}

void require_finite(const Eigen::VectorXd& v, const std::string& layer) {
  if (!v.allFinite()) throw NonFiniteError("non-finite activation in " + layer);
}

}  // namespace

LstmState LstmState::zeros(const Shape& shape) {
  LstmState s;
  for (int l = 0; l < shape.lstm_layers; ++l) {
    s.h.push_back(Eigen::VectorXd::Zero(shape.lstm_hidden));
    s.c.push_back(Eigen::VectorXd::Zero(shape.lstm_hidden));
  }
  return s;
}

Tensors Tensors::zeros_like() const {
  Tensors z;
  z.t.reserve(t.size());
  for (const auto& m : t) z.t.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
  return z;
}

std::size_t Tensors::scalar_count() const {
  std::size_t n = 0;
  for (const auto& m : t) n += static_cast<std::size_t>(m.size());
  return n;
}

bool Tensors::all_finite() const {
  return std::all_of(t.begin(), t.end(), [](const Eigen::MatrixXd& m) { return m.allFinite(); });
}

void Tensors::scale(double f) {
  for (auto& m : t) m *= f;
}

void Tensors::add(const Tensors& other) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += other.t[i];
}

Network::Network(Shape shape, std::uint64_t seed) : shape_(std::move(shape)) {
  if (shape_.input <= 0 || shape_.encoder.empty() || shape_.lstm_layers <= 0 || shape_.lstm_hidden <= 0)
    throw std::invalid_argument("network shape must be positive");
  std::mt19937_64 rng(seed);
  auto glorot = [&rng](Eigen::Index rows, Eigen::Index cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
    return m;
  };

  int width = shape_.input;
  for (int out : shape_.encoder) {
    params_.t.push_back(glorot(out, width));
    params_.t.push_back(Eigen::MatrixXd::Zero(out, 1));
    width = out;
  }
  const int hidden = shape_.lstm_hidden;
  for (int l = 0; l < shape_.lstm_layers; ++l) {
    params_.t.push_back(glorot(4 * hidden, width));
    params_.t.push_back(glorot(4 * hidden, hidden));
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(4 * hidden, 1);
    b.block(hidden, 0, hidden, 1).setOnes();  // forget gate
    params_.t.push_back(std::move(b));
    width = hidden;
  }
  params_.t.push_back(glorot(2, hidden));
  params_.t.push_back(Eigen::MatrixXd::Ones(2, 1));  // both ReLU outputs start active

  adam_m_ = params_.zeros_like();
  adam_v_ = params_.zeros_like();
}

Eigen::VectorXd Network::encoder_forward(const Eigen::VectorXd& input) const {
  if (input.size() != shape_.input)
    throw std::invalid_argument("encoder input length " + std::to_string(input.size()) +
                                " does not match " + std::to_string(shape_.input));
  Eigen::VectorXd a = input;
  for (std::size_t j = 0; j < shape_.encoder.size(); ++j)
    a = softplus(params_.t[enc_w(j)] * a + params_.t[enc_b(j)].col(0));
  return a;
}

std::pair<LstmState, Eigen::VectorXd> Network::lstm_step(const LstmState& state,
                                                         const Eigen::VectorXd& input) const {
  const Eigen::Index hdim = shape_.lstm_hidden;
  LstmState next;
  Eigen::VectorXd u = input;
  for (int l = 0; l < shape_.lstm_layers; ++l) {
    const auto lu = static_cast<std::size_t>(l);
    const Eigen::VectorXd pre = params_.t[lstm_w_in(lu)] * u + params_.t[lstm_w_rec(lu)] * state.h[lu] +
                                params_.t[lstm_b(lu)].col(0);
    const Eigen::VectorXd i = sigmoid(pre.segment(0, hdim));
    const Eigen::VectorXd f = sigmoid(pre.segment(hdim, hdim));
    const Eigen::VectorXd g = tanh(pre.segment(2 * hdim, hdim));
    const Eigen::VectorXd o = sigmoid(pre.segment(3 * hdim, hdim));
    Eigen::VectorXd c = f.cwiseProduct(state.c[lu]) + i.cwiseProduct(g);
    Eigen::VectorXd h = o.cwiseProduct(tanh(c));
    next.c.push_back(std::move(c));
    next.h.push_back(h);
    u = std::move(h);
  }
  return {std::move(next), u};
}

Eigen::Vector2d Network::head_raw(const Eigen::VectorXd& h) const {
  return params_.t[head_w()] * h + params_.t[head_b()].col(0);
}

pareto::Params Network::head_forward(const Eigen::VectorXd& h) const {
  const Eigen::Vector2d raw = head_raw(h);
  return {1.0 + std::max(raw(0), 0.0), std::max(raw(1), 0.0)};
}

pareto::Params Network::predict(std::span<const Eigen::VectorXd> sequence) const {
  if (sequence.empty()) throw std::invalid_argument("predict: empty sequence");
  LstmState state = LstmState::zeros(shape_);
  Eigen::VectorXd top;
  for (const auto& x : sequence) std::tie(state, top) = lstm_step(state, encoder_forward(x));
  return head_forward(top);
}

double Network::loss(std::span<const Eigen::VectorXd> sequence, const pareto::Params& target) const {
  const pareto::Params out = predict(sequence);
  const double da = out.alpha - target.alpha;
  const double db = out.beta - target.beta;
  return 0.5 * (da * da + db * db);
}

struct Network::StepCache {
  std::vector<Eigen::VectorXd> enc_in;   // input to each encoder layer
  std::vector<Eigen::VectorXd> enc_pre;  // pre-activation of each encoder layer
  struct Cell {
    Eigen::VectorXd u, h_prev, c_prev, i, f, g, o, c, tanh_c;
  };
  std::vector<Cell> cells;
};

Gradients Network::backward(std::span<const Eigen::VectorXd> sequence, const pareto::Params& target,
                            double* loss_out) const {
  if (sequence.empty()) throw std::invalid_argument("backward: empty sequence");
  const Eigen::Index hdim = shape_.lstm_hidden;
  const auto layers = static_cast<std::size_t>(shape_.lstm_layers);
  const std::size_t enc_layers = shape_.encoder.size();

  std::vector<StepCache> caches(sequence.size());
  LstmState state = LstmState::zeros(shape_);
  for (std::size_t t = 0; t < sequence.size(); ++t) {
    if (sequence[t].size() != shape_.input) throw std::invalid_argument("backward: input length mismatch");
    StepCache& sc = caches[t];
    Eigen::VectorXd a = sequence[t];
    for (std::size_t j = 0; j < enc_layers; ++j) {
      sc.enc_in.push_back(a);
      Eigen::VectorXd z = params_.t[enc_w(j)] * a + params_.t[enc_b(j)].col(0);
      a = softplus(z);
      require_finite(a, "encoder layer " + std::to_string(j));
      sc.enc_pre.push_back(std::move(z));
    }
    Eigen::VectorXd u = a;
    for (std::size_t l = 0; l < layers; ++l) {
      StepCache::Cell cell;
      cell.u = u;
      cell.h_prev = state.h[l];
      cell.c_prev = state.c[l];
      const Eigen::VectorXd pre =
          params_.t[lstm_w_in(l)] * u + params_.t[lstm_w_rec(l)] * cell.h_prev + params_.t[lstm_b(l)].col(0);
      cell.i = sigmoid(pre.segment(0, hdim));
      cell.f = sigmoid(pre.segment(hdim, hdim));
      cell.g = tanh(pre.segment(2 * hdim, hdim));
      cell.o = sigmoid(pre.segment(3 * hdim, hdim));
      cell.c = cell.f.cwiseProduct(cell.c_prev) + cell.i.cwiseProduct(cell.g);
      cell.tanh_c = tanh(cell.c);
      const Eigen::VectorXd h = cell.o.cwiseProduct(cell.tanh_c);
      require_finite(h, "lstm layer " + std::to_string(l));
      state.h[l] = h;
      state.c[l] = cell.c;
      u = h;
      sc.cells.push_back(std::move(cell));
    }
  }

  const Eigen::VectorXd& top = state.h.back();
  const Eigen::Vector2d raw = head_raw(top);
  const double alpha = 1.0 + std::max(raw(0), 0.0);
  const double beta = std::max(raw(1), 0.0);
  const double d_alpha = alpha - target.alpha;
  const double d_beta = beta - target.beta;
  if (loss_out != nullptr) *loss_out = 0.5 * (d_alpha * d_alpha + d_beta * d_beta);

  Gradients grads = params_.zeros_like();
  Eigen::Vector2d d_raw(raw(0) > 0 ? d_alpha : 0.0, raw(1) > 0 ? d_beta : 0.0);
  grads.t[head_w()] = d_raw * top.transpose();
  grads.t[head_b()] = d_raw;
  const Eigen::VectorXd dh_head = params_.t[head_w()].transpose() * d_raw;

  std::vector<Eigen::VectorXd> dh_next(layers, Eigen::VectorXd::Zero(hdim));
  std::vector<Eigen::VectorXd> dc_next(layers, Eigen::VectorXd::Zero(hdim));
  for (std::size_t t = sequence.size(); t-- > 0;) {
    const StepCache& sc = caches[t];
    Eigen::VectorXd dh_above =
        t + 1 == sequence.size() ? dh_head : Eigen::VectorXd(Eigen::VectorXd::Zero(hdim));
    for (std::size_t l = layers; l-- > 0;) {
      const StepCache::Cell& cell = sc.cells[l];
      const Eigen::VectorXd dh = dh_above + dh_next[l];
      const Eigen::VectorXd dc =
          dc_next[l] + dh.cwiseProduct(cell.o).cwiseProduct((1.0 - cell.tanh_c.array().square()).matrix());
      Eigen::VectorXd dpre(4 * hdim);
      dpre.segment(0, hdim) = dc.cwiseProduct(cell.g).cwiseProduct(
          cell.i.cwiseProduct((1.0 - cell.i.array()).matrix()));
      dpre.segment(hdim, hdim) = dc.cwiseProduct(cell.c_prev).cwiseProduct(
          cell.f.cwiseProduct((1.0 - cell.f.array()).matrix()));
      dpre.segment(2 * hdim, hdim) =
          dc.cwiseProduct(cell.i).cwiseProduct((1.0 - cell.g.array().square()).matrix());
      dpre.segment(3 * hdim, hdim) = dh.cwiseProduct(cell.tanh_c).cwiseProduct(
          cell.o.cwiseProduct((1.0 - cell.o.array()).matrix()));
      dc_next[l] = dc.cwiseProduct(cell.f);
      grads.t[lstm_w_in(l)].noalias() += dpre * cell.u.transpose();
      grads.t[lstm_w_rec(l)].noalias() += dpre * cell.h_prev.transpose();
      grads.t[lstm_b(l)].col(0) += dpre;
      dh_next[l] = params_.t[lstm_w_rec(l)].transpose() * dpre;
      dh_above = params_.t[lstm_w_in(l)].transpose() * dpre;
    }
    Eigen::VectorXd da = std::move(dh_above);
    for (std::size_t j = enc_layers; j-- > 0;) {
      const Eigen::VectorXd dz = da.cwiseProduct(sigmoid(sc.enc_pre[j]));
      grads.t[enc_w(j)].noalias() += dz * sc.enc_in[j].transpose();
      grads.t[enc_b(j)].col(0) += dz;
      if (j > 0) da = params_.t[enc_w(j)].transpose() * dz;
    }
  }
  return grads;
}

void Network::adam_step(const Gradients& grads, double lr) {
  if (!(lr > 0)) throw std::invalid_argument("adam_step: lr must be positive");
  if (grads.t.size() != params_.t.size()) throw std::invalid_argument("adam_step: gradient shape mismatch");
  if (!grads.all_finite()) throw NonFiniteError("adam_step: non-finite gradient");
  ++step_count_;
  const double step = static_cast<double>(step_count_);
  const double bc1 = 1.0 - std::pow(kAdamBeta1, step);
  const double bc2 = 1.0 - std::pow(kAdamBeta2, step);
  for (std::size_t k = 0; k < params_.t.size(); ++k) {
    const auto& g = grads.t[k].array();
    auto m = adam_m_.t[k].array();
    auto v = adam_v_.t[k].array();
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.square();
    params_.t[k].array() -= lr * (m / bc1) / ((v / bc2).sqrt() + kAdamEps);
  }
}

bool Network::operator==(const Network& other) const {
  auto same = [](const Tensors& a, const Tensors& b) {
    if (a.t.size() != b.t.size()) return false;
    for (std::size_t i = 0; i < a.t.size(); ++i) {
      if (a.t[i].rows() != b.t[i].rows() || a.t[i].cols() != b.t[i].cols()) return false;
      if (a.t[i] != b.t[i]) return false;
    }
    return true;
  };
  return shape_ == other.shape_ && step_count_ == other.step_count_ && same(params_, other.params_) &&
         same(adam_m_, other.adam_m_) && same(adam_v_, other.adam_v_);
}

// ---- checkpoint ------------------------------------------------------------

namespace {

constexpr std::array<char, 8> kMagic{'S', 'T', 'R', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint8_t kVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = std::bit_cast<U>(value);
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T read_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw std::runtime_error("checkpoint truncated");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

void write_tensor(std::ostream& out, const Eigen::MatrixXd& m, bool vector) {
  if (vector) {
    write_le<std::uint32_t>(out, 1);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  } else {
    write_le<std::uint32_t>(out, 2);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_le<double>(out, m(r, c));
}

Eigen::MatrixXd read_tensor(std::istream& in, std::uint32_t& rank) {
  rank = read_le<std::uint32_t>(in);
  if (rank != 1 && rank != 2) throw std::runtime_error("checkpoint: unsupported tensor rank");
  const auto rows = read_le<std::uint32_t>(in);
  const std::uint32_t cols = rank == 2 ? read_le<std::uint32_t>(in) : 1;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = read_le<double>(in);
  return m;
}

}  // namespace

void Network::save(std::ostream& out) const {
  out.write(kMagic.data(), kMagic.size());
  out.put(static_cast<char>(kVersion));
  auto is_bias = [this](std::size_t k) {
    if (k == head_b()) return true;
    if (k < lstm_w_in(0)) return k % 2 == 1;
    if (k < head_w()) return (k - lstm_w_in(0)) % 3 == 2;
    return false;
  };
  for (const Tensors* group : {&params_, &adam_m_, &adam_v_})
    for (std::size_t k = 0; k < group->t.size(); ++k) write_tensor(out, group->t[k], is_bias(k));
  write_le<std::uint64_t>(out, step_count_);
}

void Network::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  save(out);
}

Network Network::load(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("checkpoint: bad magic");
  const int version = in.get();
  if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

  // Tensors are untagged, so the shape is recovered from the rank pattern:
  // encoder (2,1) pairs, lstm (2,2,1) triples, then the (2,1) head.
  std::vector<Eigen::MatrixXd> all;
  std::vector<std::uint32_t> ranks;
  std::vector<char> rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (rest.size() < 8) throw std::runtime_error("checkpoint truncated");
  std::string body(rest.begin(), rest.end() - 8);
  std::string tail(rest.end() - 8, rest.end());
  std::istringstream bs(body);
  while (bs.peek() != std::char_traits<char>::eof()) {
    std::uint32_t rank = 0;
    all.push_back(read_tensor(bs, rank));
    ranks.push_back(rank);
  }
  if (all.size() % 3 != 0) throw std::runtime_error("checkpoint: tensor count not a multiple of 3");
  const std::size_t per = all.size() / 3;

  Shape shape;
  shape.encoder.clear();
  std::size_t k = 0;
  while (k + 1 < per && ranks[k] == 2 && ranks[k + 1] == 1) {
    if (shape.encoder.empty()) shape.input = static_cast<int>(all[k].cols());
    shape.encoder.push_back(static_cast<int>(all[k].rows()));
    k += 2;
  }
  int layers = 0;
  while (k + 2 < per && ranks[k] == 2 && ranks[k + 1] == 2 && ranks[k + 2] == 1) {
    shape.lstm_hidden = static_cast<int>(all[k + 1].cols());
    ++layers;
    k += 3;
  }
  shape.lstm_layers = layers;
  if (shape.encoder.empty() || layers == 0 || k + 2 != per)
    throw std::runtime_error("checkpoint: unrecognised tensor layout");

  Network net;
  net.shape_ = shape;
  net.params_.t.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(per));
  net.adam_m_.t.assign(all.begin() + static_cast<std::ptrdiff_t>(per), all.begin() + static_cast<std::ptrdiff_t>(2 * per));
  net.adam_v_.t.assign(all.begin() + static_cast<std::ptrdiff_t>(2 * per), all.end());
  std::istringstream ts(tail);
  net.step_count_ = read_le<std::uint64_t>(ts);

  const Network fresh(shape, 0);
  for (std::size_t i = 0; i < per; ++i)
    if (fresh.params_.t[i].rows() != net.params_.t[i].rows() || fresh.params_.t[i].cols() != net.params_.t[i].cols())
      throw std::runtime_error("checkpoint: inconsistent tensor shapes");
  return net;
}

Network Network::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  return load(in);
}

}  // namespace straggler::neural
