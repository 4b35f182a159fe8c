#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hapcompass/core/errors.hpp"
#include "hapcompass/core/rng.hpp"
#include "hapcompass/learning/policy.hpp"
#include "hapcompass/sim/contact_sim.hpp"

namespace hapcompass::learning {

namespace {

// A constant feature carries no information; leave it unscaled.
constexpr double kMinStd = 1e-8;

void require_finite(const std::array<double, 6>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument("observation must be finite");
  }
}

std::array<double, 6> raw(const Observation& o) {
  return {o.tactile_delta.x, o.tactile_delta.y, o.tactile_delta.z, o.ee_position.x, o.ee_position.y, o.ee_position.z};
}

struct Moments {
  double sum = 0.0;
  double sq = 0.0;
  double n = 0.0;
  void add(double x) {
    sum += x;
    sq += x * x;
    n += 1.0;
  }
  double mean() const { return sum / n; }
  double stddev() const {
    const double var = std::max(0.0, sq / n - mean() * mean());
    const double s = std::sqrt(var);
    return s > kMinStd ? s : 1.0;
  }
};

template <class F>
void for_each_layer(std::vector<Dense>& a, const std::vector<Dense>& b, F f) {
  for (std::size_t i = 0; i < a.size(); ++i) f(a[i], b[i]);
}

void run(const std::vector<Dense>& layers, const Eigen::Ref<const Eigen::MatrixXd>& in,
         std::vector<Eigen::MatrixXd>& acts) {
  acts.resize(layers.size() + 1);
  acts[0] = in;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    Eigen::MatrixXd& z = acts[k + 1];
    z.noalias() = layers[k].weight * acts[k];
    z.colwise() += layers[k].bias;
    if (layers[k].tanh) z = z.array().tanh().matrix();
  }
}

// Backpropagates through `layers`; dz.back() must hold d(loss)/d(output) on
// entry. Writes d(loss)/d(input) to `din` when given.
void back(const std::vector<Dense>& layers, const std::vector<Eigen::MatrixXd>& acts, std::vector<Eigen::MatrixXd>& dz,
          std::vector<Dense>& grads, Eigen::MatrixXd* din) {
  for (std::size_t k = layers.size(); k-- > 0;) {
    if (layers[k].tanh) dz[k].array() *= 1.0 - acts[k + 1].array().square();
    grads[k].weight.noalias() = dz[k] * acts[k].transpose();
    grads[k].bias = dz[k].rowwise().sum();
    if (k > 0) {
      dz[k - 1].noalias() = layers[k].weight.transpose() * dz[k];
    } else if (din) {
      din->noalias() = layers[k].weight.transpose() * dz[k];
    }
  }
}

Dense xavier(int in, int out, bool tanh, Rng& rng) {
  Dense d;
  const double limit = std::sqrt(6.0 / (in + out));
  d.weight.resize(out, in);
  for (int c = 0; c < in; ++c) {
    for (int r = 0; r < out; ++r) d.weight(r, c) = rng.uniform(-limit, limit);
  }
  d.bias = Eigen::VectorXd::Zero(out);
  d.tanh = tanh;
  return d;
}

}  // namespace

void PolicyShape::validate() const {
  if (hidden <= 0) throw ConfigError("policy.hidden must be > 0");
  if (horizon <= 0) throw ConfigError("policy.horizon must be > 0");
  if (replan <= 0 || replan > horizon) throw ConfigError("policy.replan must be in [1, horizon]");
}

Normalizer Normalizer::fit(const Dataset& data) {
  if (data.transitions.empty()) throw std::invalid_argument("cannot fit normalization on an empty dataset");
  std::array<Moments, 6> in{};
  std::array<Moments, 3> out{};
  for (const auto& t : data.transitions) {
    const auto x = raw(t.obs);
    for (std::size_t i = 0; i < 6; ++i) in[i].add(x[i]);
    for (const auto& a : t.chunk) {
      out[0].add(a.x);
      out[1].add(a.y);
      out[2].add(a.z);
    }
  }
  Normalizer n;
  for (std::size_t i = 0; i < 6; ++i) {
    n.in_mean[i] = in[i].mean();
    n.in_std[i] = in[i].stddev();
  }
  for (std::size_t i = 0; i < 3; ++i) {
    n.out_mean[i] = out[i].mean();
    n.out_std[i] = out[i].stddev();
  }
  return n;
}

std::array<double, 6> Normalizer::normalize(const Observation& obs) const {
  auto x = raw(obs);
  require_finite(x);
  for (std::size_t i = 0; i < 6; ++i) x[i] = (x[i] - in_mean[i]) / in_std[i];
  return x;
}

Observation Normalizer::denormalize(const std::array<double, 6>& x) const {
  std::array<double, 6> v{};
  for (std::size_t i = 0; i < 6; ++i) v[i] = x[i] * in_std[i] + in_mean[i];
  return {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
}

Position3 Normalizer::denormalize_action(const std::array<double, 3>& y) const {
  return {y[0] * out_std[0] + out_mean[0], y[1] * out_std[1] + out_mean[1], y[2] * out_std[2] + out_mean[2]};
}

std::array<double, 3> Normalizer::normalize_action(const Position3& a) const {
  return {(a.x - out_mean[0]) / out_std[0], (a.y - out_mean[1]) / out_std[1], (a.z - out_mean[2]) / out_std[2]};
}

void Normalizer::validate() const {
  auto ok = [](const auto& mean, const auto& std) {
    for (std::size_t i = 0; i < mean.size(); ++i) {
      if (!std::isfinite(mean[i]) || !std::isfinite(std[i]) || !(std[i] > 0.0)) return false;
    }
    return true;
  };
  if (!ok(in_mean, in_std) || !ok(out_mean, out_std)) {
    throw ShapeError("normalization statistics must be finite with std > 0");
  }
}

std::size_t Network::param_count() const {
  std::size_t n = 0;
  for (const auto* group : {&tactile, &proprio, &decoder}) {
    for (const auto& l : *group) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  }
  return n;
}

double& Network::param(std::size_t i) {
  for (auto* group : {&tactile, &proprio, &decoder}) {
    for (auto& l : *group) {
      const auto w = static_cast<std::size_t>(l.weight.size());
      if (i < w) return l.weight.data()[i];
      i -= w;
      const auto b = static_cast<std::size_t>(l.bias.size());
      if (i < b) return l.bias.data()[i];
      i -= b;
    }
  }
  throw std::out_of_range("parameter index out of range");
}

double Network::param(std::size_t i) const { return const_cast<Network*>(this)->param(i); }

Network Network::zeros_like() const {
  Network z = *this;
  for (auto* group : {&z.tactile, &z.proprio, &z.decoder}) {
    for (auto& l : *group) {
      l.weight.setZero();
      l.bias.setZero();
    }
  }
  return z;
}

void Network::add_scaled(const Network& other, double scale) {
  auto axpy = [scale](Dense& a, const Dense& b) {
    a.weight += scale * b.weight;
    a.bias += scale * b.bias;
  };
  for_each_layer(tactile, other.tactile, axpy);
  for_each_layer(proprio, other.proprio, axpy);
  for_each_layer(decoder, other.decoder, axpy);
}

bool Network::finite() const {
  for (const auto* group : {&tactile, &proprio, &decoder}) {
    for (const auto& l : *group) {
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    }
  }
  return true;
}

Network init_network(const PolicyShape& shape, std::uint64_t seed) {
  shape.validate();
  Rng rng(seed);
  const int h = shape.hidden;
  Network n;
  n.tactile = {xavier(3, h, true, rng), xavier(h, h, true, rng)};
  n.proprio = {xavier(3, h, true, rng), xavier(h, h, true, rng)};
  n.decoder = {xavier(2 * h, h, true, rng), xavier(h, 3 * shape.horizon, false, rng)};
  return n;
}

Batch make_batch(const Dataset& data, const Normalizer& norm) {
  const auto n = static_cast<Eigen::Index>(data.transitions.size());
  Batch b{Eigen::MatrixXd(6, n), Eigen::MatrixXd(3 * data.horizon, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const Transition& t = data.transitions[static_cast<std::size_t>(j)];
    if (static_cast<int>(t.chunk.size()) != data.horizon) throw ShapeError("transition chunk length != dataset horizon");
    const auto x = norm.normalize(t.obs);
    for (Eigen::Index i = 0; i < 6; ++i) b.inputs(i, j) = x[static_cast<std::size_t>(i)];
    for (int s = 0; s < data.horizon; ++s) {
      const auto y = norm.normalize_action(t.chunk[static_cast<std::size_t>(s)]);
      for (int a = 0; a < 3; ++a) b.targets(3 * s + a, j) = y[static_cast<std::size_t>(a)];
    }
  }
  return b;
}

Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& inputs) {
  std::vector<Eigen::MatrixXd> t, p, d;
  run(net.tactile, inputs.topRows(3), t);
  run(net.proprio, inputs.bottomRows(3), p);
  Eigen::MatrixXd features(t.back().rows() + p.back().rows(), inputs.cols());
  features << t.back(), p.back();
  run(net.decoder, features, d);
  return d.back();
}

double loss_and_gradient(const Network& net, const Batch& batch, Network* grad) {
  Workspace ws;
  return loss_and_gradient(net, batch, grad, ws);
}

double loss_and_gradient(const Network& net, const Batch& batch, Network* grad, Workspace& ws) {
  if (batch.inputs.rows() != 6 || batch.inputs.cols() != batch.targets.cols() || batch.inputs.cols() == 0) {
    throw ShapeError("batch inputs must be 6 × n with matching targets");
  }
  run(net.tactile, batch.inputs.topRows(3), ws.tactile);
  run(net.proprio, batch.inputs.bottomRows(3), ws.proprio);
  const Eigen::Index th = ws.tactile.back().rows();
  const Eigen::Index ph = ws.proprio.back().rows();
  ws.features.resize(th + ph, batch.inputs.cols());
  ws.features.topRows(th) = ws.tactile.back();
  ws.features.bottomRows(ph) = ws.proprio.back();
  run(net.decoder, ws.features, ws.decoder);
  if (ws.decoder.back().rows() != batch.targets.rows()) throw ShapeError("network output size != target size");

  ws.err.noalias() = ws.decoder.back() - batch.targets;
  const double count = static_cast<double>(ws.err.size());
  const double loss = ws.err.squaredNorm() / count;
  if (grad) {
    if (grad->decoder.size() != net.decoder.size()) *grad = net.zeros_like();
    ws.dz_decoder.resize(net.decoder.size());
    ws.dz_tactile.resize(net.tactile.size());
    ws.dz_proprio.resize(net.proprio.size());
    ws.dz_decoder.back().noalias() = (2.0 / count) * ws.err;
    back(net.decoder, ws.decoder, ws.dz_decoder, grad->decoder, &ws.dfeatures);
    ws.dz_tactile.back() = ws.dfeatures.topRows(th);
    ws.dz_proprio.back() = ws.dfeatures.bottomRows(ph);
    back(net.tactile, ws.tactile, ws.dz_tactile, grad->tactile, nullptr);
    back(net.proprio, ws.proprio, ws.dz_proprio, grad->proprio, nullptr);
  }
  return loss;
}

void Policy::validate() const {
  shape.validate();
  norm.validate();
  const int h = shape.hidden;
  auto check = [](const std::vector<Dense>& layers, std::initializer_list<std::array<int, 3>> want, const char* what) {
    if (layers.size() != want.size()) throw ShapeError(std::string(what) + ": wrong layer count");
    std::size_t i = 0;
    for (const auto& [out, in, tanh] : want) {
      const Dense& l = layers[i++];
      if (l.weight.rows() != out || l.weight.cols() != in || l.bias.size() != out || l.tanh != (tanh != 0)) {
        throw ShapeError(std::string(what) + " layer " + std::to_string(i - 1) + ": expected " + std::to_string(out) +
                         "×" + std::to_string(in) + ", got " + std::to_string(l.weight.rows()) + "×" +
                         std::to_string(l.weight.cols()));
      }
    }
  };
  check(net.tactile, {{h, 3, 1}, {h, h, 1}}, "tactile encoder");
  check(net.proprio, {{h, 3, 1}, {h, h, 1}}, "proprio encoder");
  check(net.decoder, {{h, 2 * h, 1}, {3 * shape.horizon, h, 0}}, "decoder");
  if (!net.finite()) throw ShapeError("policy weights must be finite");
}

ActionChunk Policy::predict(const Observation& obs, double max_step) const {
  const auto x = norm.normalize(obs);
  const Eigen::MatrixXd y = forward(net, Eigen::Map<const Eigen::Matrix<double, 6, 1>>(x.data()));
  ActionChunk chunk;
  chunk.reserve(static_cast<std::size_t>(shape.horizon));
  for (int s = 0; s < shape.horizon; ++s) {
    const Position3 a = norm.denormalize_action({y(3 * s, 0), y(3 * s + 1, 0), y(3 * s + 2, 0)});
    chunk.push_back(sim::clamp_step(a, max_step));
  }
  return chunk;
}

}  // namespace hapcompass::learning
