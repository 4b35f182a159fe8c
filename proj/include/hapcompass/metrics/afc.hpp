#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hapcompass::metrics {

/// Forced-choice trial. Canonical choice k points at k·360°/n, 0° = device +x,
/// counter-clockwise.
struct AfcTrial {
  double true_direction = 0.0;  // rad, one of the canonical angles
  int response = 0;
  int n_choices = 8;

  friend constexpr bool operator==(const AfcTrial&, const AfcTrial&) = default;
};

struct AfcStats {
  int n_choices = 0;
  std::vector<std::vector<long>> confusion;  // [true][response]
  double accuracy = 0.0;
  double mean_angular_error_deg = 0.0;  // over all trials, correct ones count 0°
  std::size_t trials = 0;
};

double canonical_angle(int choice, int n_choices);

/// Choice whose canonical angle is closest to `angle`.
int nearest_choice(double angle, int n_choices);

/// Index of a canonical direction. Throws std::invalid_argument if `angle`
/// is not canonical within 1e-9 rad or n_choices is not 4 or 8.
int choice_index(double angle, int n_choices);

/// Throws std::invalid_argument on an empty sequence, mixed n_choices or an
/// out-of-range response.
AfcStats afc_stats(std::span<const AfcTrial> trials);

/// Desk-scale stand-in for a human observer. The vertical component of the
/// stimulus is attenuated by `attenuation_y`; perceived angle is the
/// direction of (cos θ, a_y·sin θ) plus von Mises noise whose concentration
/// is kappa·|stimulus|², so weaker stimuli are noisier.
AfcTrial synthetic_respondent(double true_direction, double kappa, double attenuation_y, std::uint64_t seed,
                              int n_choices = 8);

/// Balanced, seeded trial order: every canonical direction exactly
/// `repetitions` times.
std::vector<int> afc_trial_order(int n_choices, int repetitions, std::uint64_t seed);

/// Runs a full synthetic study: balanced order, one respondent draw per trial.
std::vector<AfcTrial> run_synthetic_afc(int n_choices, int repetitions, double kappa, double attenuation_y,
                                        std::uint64_t seed);

}  // namespace hapcompass::metrics
