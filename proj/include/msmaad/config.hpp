// Run configuration shared by the command-line tools.

#ifndef MSMAAD_CONFIG_HPP
#define MSMAAD_CONFIG_HPP

#include "msmaad/embed.hpp"

#include "json.hpp"

#include <cstdint>

namespace msmaad {

// Switch probabilities (p12 = p21) are the stored quantity; the matching
// p_stay values are derived. With the defaults both chains expect one
// switch per 1000 s: 1e-4 per sample at 10 Hz and 1e-3 per 1 s window.
struct RunConfig {
  Index lag_count = 6;
  LagDirection lag_direction = LagDirection::kFuture;
  double fs_hz = 10.0;
  double p_switch_sample = 1e-4;
  double p_switch_window = 1e-3;
  double window_len_s = 1.0;
  // Negative selects the default relative ridge in EM; pretraining uses
  // max(ridge, 0).
  double ridge = -1.0;
  int max_iter = 100;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  bool normalize_envelopes = true;
  Index min_hold_samples = 1;

  double p_stay_sample() const { return 1.0 - p_switch_sample; }
  double p_stay_window() const { return 1.0 - p_switch_window; }
  Index window_len_samples() const;

  // Throws InvalidInput when a field is out of range.
  void validate() const;

  nlohmann::ordered_json to_json() const;
  // Keys absent from `doc` keep their current value. Accepts p_stay_* as an
  // alternative to p_switch_*.
  void merge_json(const nlohmann::ordered_json& doc);
};

// Expected number of chain switches per second.
double expected_switches_per_second(double p_switch, double steps_per_second);

}  // namespace msmaad

#endif  // MSMAAD_CONFIG_HPP
