#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "hapcompass/core/units.hpp"
#include "json.hpp"

namespace hapcompass::learning {

using json = nlohmann::json;

struct Observation {
  Force3 tactile_delta;  // N, sensor frame
  Position3 ee_position;

  friend constexpr bool operator==(const Observation&, const Observation&) = default;
};

using ActionChunk = std::vector<Position3>;

struct Transition {
  Observation obs;
  ActionChunk chunk;
};

struct Dataset {
  int horizon = 10;
  std::vector<Transition> transitions;
};

struct PolicyShape {
  int hidden = 64;
  int horizon = 10;  // steps per predicted chunk
  int replan = 5;    // steps executed before predicting again

  void validate() const;
  friend constexpr bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

/// Per-input and per-action-axis standardization. The action statistics are
/// shared by every step of a chunk.
struct Normalizer {
  std::array<double, 6> in_mean{};
  std::array<double, 6> in_std{1, 1, 1, 1, 1, 1};
  std::array<double, 3> out_mean{};
  std::array<double, 3> out_std{1, 1, 1};

  static Normalizer fit(const Dataset& data);

  std::array<double, 6> normalize(const Observation& obs) const;
  Observation denormalize(const std::array<double, 6>& x) const;
  Position3 denormalize_action(const std::array<double, 3>& y) const;
  std::array<double, 3> normalize_action(const Position3& a) const;

  void validate() const;
  friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

struct Dense {
  Eigen::MatrixXd weight;  // out × in
  Eigen::VectorXd bias;
  bool tanh = true;

  friend bool operator==(const Dense& a, const Dense& b) {
    return a.tanh == b.tanh && a.weight == b.weight && a.bias == b.bias;
  }
};

/// Two encoders whose features are concatenated and decoded into a chunk.
struct Network {
  std::vector<Dense> tactile;  // 3 → hidden → hidden
  std::vector<Dense> proprio;  // 3 → hidden → hidden
  std::vector<Dense> decoder;  // 2·hidden → hidden → 3·horizon (linear)

  std::size_t param_count() const;
  double& param(std::size_t i);
  double param(std::size_t i) const;
  Network zeros_like() const;
  /// this += scale · other (same shapes).
  void add_scaled(const Network& other, double scale);
  bool finite() const;

  friend bool operator==(const Network&, const Network&) = default;
};

Network init_network(const PolicyShape& shape, std::uint64_t seed);

/// Columns are samples. Inputs already normalized: rows 0-2 tactile, 3-5
/// position. Targets: 3·horizon rows, step-major.
struct Batch {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
};

Batch make_batch(const Dataset& data, const Normalizer& norm);

Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& inputs);

/// Scratch buffers reused across calls on batches of the same size.
struct Workspace {
  std::vector<Eigen::MatrixXd> tactile, proprio, decoder;  // activations, input first
  std::vector<Eigen::MatrixXd> dz_tactile, dz_proprio, dz_decoder;
  Eigen::MatrixXd features, err, dfeatures;
};

/// Mean squared error over every output of every sample; fills `grad` when
/// given.
double loss_and_gradient(const Network& net, const Batch& batch, Network* grad);
double loss_and_gradient(const Network& net, const Batch& batch, Network* grad, Workspace& ws);

struct Policy {
  PolicyShape shape;
  Normalizer norm;
  Network net;
  json provenance = json::object();  // resolved config the policy was trained with

  /// Throws ShapeError if layer shapes disagree with `shape` or any weight is
  /// non-finite.
  void validate() const;

  /// Chunk in meters; each step clamped to `max_step`.
  ActionChunk predict(const Observation& obs, double max_step) const;

  friend bool operator==(const Policy& a, const Policy& b) {
    return a.shape == b.shape && a.norm == b.norm && a.net == b.net && a.provenance == b.provenance;
  }
};

struct TrainConfig {
  PolicyShape shape;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int epochs = 500;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  Policy policy;
  std::vector<double> loss_curve;  // loss before each update, then the final loss
};

/// Full-batch gradient descent with momentum on the chunk MSE. Throws
/// DivergenceError as soon as the loss or the weights stop being finite.
TrainResult train_bc(const Dataset& data, const TrainConfig& cfg);

inline constexpr std::uint32_t kPolicyFileVersion = 1;

void save_policy(const std::filesystem::path& path, const Policy& policy);
/// Throws ShapeError on inconsistent shapes, DecodeError on a damaged file.
Policy load_policy(const std::filesystem::path& path);

}  // namespace hapcompass::learning
