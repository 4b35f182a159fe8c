#include "hapcompass/metrics/afc.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "hapcompass/core/rng.hpp"
#include "hapcompass/core/units.hpp"

namespace hapcompass::metrics {

namespace {

void check_n(int n_choices) {
  if (n_choices != 4 && n_choices != 8) {
    throw std::invalid_argument("n_choices must be 4 or 8, got " + std::to_string(n_choices));
  }
}

}  // namespace

double canonical_angle(int choice, int n_choices) {
  check_n(n_choices);
  return wrap_angle(kTwoPi * choice / n_choices);
}

int nearest_choice(double angle, int n_choices) {
  check_n(n_choices);
  const double step = kTwoPi / n_choices;
  const double a = std::fmod(std::fmod(angle, kTwoPi) + kTwoPi, kTwoPi);
  return static_cast<int>(std::lround(a / step)) % n_choices;
}

int choice_index(double angle, int n_choices) {
  const int k = nearest_choice(angle, n_choices);
  if (std::abs(shortest_angular_distance(angle, canonical_angle(k, n_choices))) > 1e-9) {
    throw std::invalid_argument("direction " + std::to_string(angle) + " is not a canonical AFC angle");
  }
  return k;
}

AfcStats afc_stats(std::span<const AfcTrial> trials) {
  if (trials.empty()) throw std::invalid_argument("afc_stats needs at least one trial");
  const int n = trials.front().n_choices;
  check_n(n);
  AfcStats s;
  s.n_choices = n;
  s.trials = trials.size();
  s.confusion.assign(static_cast<std::size_t>(n), std::vector<long>(static_cast<std::size_t>(n), 0));
  long correct = 0;
  long offset_slots = 0;
  for (const auto& t : trials) {
    if (t.n_choices != n) throw std::invalid_argument("afc_stats got mixed n_choices");
    if (t.response < 0 || t.response >= n) throw std::invalid_argument("afc response out of range");
    const int truth = choice_index(t.true_direction, n);
    ++s.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(t.response)];
    correct += truth == t.response ? 1 : 0;
    const int d = std::abs(truth - t.response);
    offset_slots += std::min(d, n - d);
  }
  const double total = static_cast<double>(trials.size());
  s.accuracy = static_cast<double>(correct) / total;
  s.mean_angular_error_deg = (360.0 / n) * static_cast<double>(offset_slots) / total;
  return s;
}

AfcTrial synthetic_respondent(double true_direction, double kappa, double attenuation_y, std::uint64_t seed,
                              int n_choices) {
  check_n(n_choices);
  if (!(kappa >= 0.0)) throw std::invalid_argument("kappa must be >= 0");
  if (!(attenuation_y >= 0.0 && attenuation_y <= 1.0)) throw std::invalid_argument("attenuation_y must be in [0, 1]");
  Rng rng(seed);
  const double sx = std::cos(true_direction);
  const double sy = attenuation_y * std::sin(true_direction);
  const double strength2 = sx * sx + sy * sy;
  const double perceived = rng.von_mises(std::atan2(sy, sx), kappa * strength2);
  return AfcTrial{true_direction, nearest_choice(perceived, n_choices), n_choices};
}

std::vector<int> afc_trial_order(int n_choices, int repetitions, std::uint64_t seed) {
  check_n(n_choices);
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  std::vector<int> order(static_cast<std::size_t>(n_choices * repetitions));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i % static_cast<std::size_t>(n_choices));
  Rng rng(seed);
  rng.shuffle(std::span<int>(order));
  return order;
}

std::vector<AfcTrial> run_synthetic_afc(int n_choices, int repetitions, double kappa, double attenuation_y,
                                        std::uint64_t seed) {
  const std::vector<int> order = afc_trial_order(n_choices, repetitions, derive_seed(seed, 0));
  std::vector<AfcTrial> trials;
  trials.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    trials.push_back(synthetic_respondent(canonical_angle(order[i], n_choices), kappa, attenuation_y,
                                          derive_seed(seed, i + 1), n_choices));
  }
  return trials;
}

}  // namespace hapcompass::metrics
