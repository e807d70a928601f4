#include "msmaad/config.hpp"

#include <cmath>
#include <string>

namespace msmaad {

Index RunConfig::window_len_samples() const {
  return static_cast<Index>(std::llround(window_len_s * fs_hz));
}

void RunConfig::validate() const {
  const auto open_unit = [](double p) { return p > 0.0 && p < 1.0; };
  if (lag_count < 1) throw InvalidInput("lag_count must be at least 1");
  if (!(fs_hz > 0.0) || !std::isfinite(fs_hz)) throw InvalidInput("fs_hz must be positive");
  if (!open_unit(p_switch_sample) || !open_unit(p_stay_sample())) {
    throw InvalidInput("sample-rate transition probability must lie in (0, 1)");
  }
  if (!open_unit(p_switch_window) || !open_unit(p_stay_window())) {
    throw InvalidInput("window-rate transition probability must lie in (0, 1)");
  }
  if (!(window_len_s * fs_hz >= 3.0)) {
    throw InvalidInput("window_len_s * fs_hz must be at least 3 samples");
  }
  if (max_iter < 0) throw InvalidInput("max_iter must be non-negative");
  if (!(tol >= 0.0)) throw InvalidInput("tol must be non-negative");
  if (min_hold_samples < 1) throw InvalidInput("min_hold_samples must be at least 1");
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["lag_count"] = lag_count;
  j["lag_direction"] = std::string(to_string(lag_direction));
  j["fs_hz"] = fs_hz;
  j["p_switch_sample"] = p_switch_sample;
  j["p_switch_window"] = p_switch_window;
  j["p_stay_sample"] = p_stay_sample();
  j["p_stay_window"] = p_stay_window();
  j["window_len_s"] = window_len_s;
  if (ridge >= 0.0) {
    j["ridge"] = ridge;
  } else {
    j["ridge"] = nullptr;
  }
  j["em"] = {{"max_iter", max_iter}, {"tol", tol}};
  j["seed"] = seed;
  j["normalize_envelopes"] = normalize_envelopes;
  j["min_hold_samples"] = min_hold_samples;
  return j;
}

void RunConfig::merge_json(const nlohmann::ordered_json& doc) {
  try {
    if (!doc.is_object()) throw InvalidInput("config must be a JSON object");
    if (doc.contains("lag_count")) lag_count = doc["lag_count"].get<Index>();
    if (doc.contains("lag_direction")) {
      lag_direction = parse_lag_direction(doc["lag_direction"].get<std::string>());
    }
    if (doc.contains("fs_hz")) fs_hz = doc["fs_hz"].get<double>();
    if (doc.contains("p_stay_sample")) p_switch_sample = 1.0 - doc["p_stay_sample"].get<double>();
    if (doc.contains("p_stay_window")) p_switch_window = 1.0 - doc["p_stay_window"].get<double>();
    if (doc.contains("p_switch_sample")) p_switch_sample = doc["p_switch_sample"].get<double>();
    if (doc.contains("p_switch_window")) p_switch_window = doc["p_switch_window"].get<double>();
    if (doc.contains("window_len_s")) window_len_s = doc["window_len_s"].get<double>();
    if (doc.contains("ridge")) ridge = doc["ridge"].is_null() ? -1.0 : doc["ridge"].get<double>();
    if (doc.contains("em")) {
      const auto& em = doc["em"];
      if (em.contains("max_iter")) max_iter = em["max_iter"].get<int>();
      if (em.contains("tol")) tol = em["tol"].get<double>();
    }
    if (doc.contains("max_iter")) max_iter = doc["max_iter"].get<int>();
    if (doc.contains("tol")) tol = doc["tol"].get<double>();
    if (doc.contains("seed")) seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("normalize_envelopes")) {
      normalize_envelopes = doc["normalize_envelopes"].get<bool>();
    }
    if (doc.contains("min_hold_samples")) min_hold_samples = doc["min_hold_samples"].get<Index>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("invalid config field: ") + e.what());
  }
}

double expected_switches_per_second(double p_switch, double steps_per_second) {
  return p_switch * steps_per_second;
}

}  // namespace msmaad
