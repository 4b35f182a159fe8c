#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hapcompass/core/errors.hpp"
#include "hapcompass/learning/policy.hpp"

namespace hapcompass::learning {

void TrainConfig::validate() const {
  shape.validate();
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train.learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must be in [0, 1)");
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
}

TrainResult train_bc(const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.transitions.empty()) throw std::invalid_argument("training needs at least one transition");
  if (data.horizon != cfg.shape.horizon) {
    throw ShapeError("dataset horizon " + std::to_string(data.horizon) + " != policy horizon " +
                     std::to_string(cfg.shape.horizon));
  }
  TrainResult out;
  Policy& policy = out.policy;
  policy.shape = cfg.shape;
  policy.norm = Normalizer::fit(data);
  policy.net = init_network(cfg.shape, cfg.seed);
  const Batch batch = make_batch(data, policy.norm);

  Network velocity = policy.net.zeros_like();
  Network grad = policy.net.zeros_like();
  Workspace ws;
  auto diverged = [&](int epoch, double loss) {
    std::ostringstream msg;
    msg << "training diverged at epoch " << epoch << " (loss " << loss << ", lr " << cfg.learning_rate << ")";
    if (!out.loss_curve.empty()) msg << "; last finite loss " << out.loss_curve.back();
    return DivergenceError(msg.str());
  };
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double loss = loss_and_gradient(policy.net, batch, &grad, ws);
    if (!std::isfinite(loss)) throw diverged(epoch, loss);
    out.loss_curve.push_back(loss);
    velocity.add_scaled(velocity, cfg.momentum - 1.0);
    velocity.add_scaled(grad, -cfg.learning_rate);
    policy.net.add_scaled(velocity, 1.0);
    if (!policy.net.finite()) throw diverged(epoch, loss);
  }
  const double final_loss = loss_and_gradient(policy.net, batch, nullptr, ws);
  if (!std::isfinite(final_loss)) throw diverged(cfg.epochs, final_loss);
  out.loss_curve.push_back(final_loss);
  return out;
}

}  // namespace hapcompass::learning
