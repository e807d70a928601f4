#include "msmaad/core.hpp"

#include <cmath>
#include <iostream>
#include <mutex>
#include <sstream>

namespace msmaad {

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink_slot() {
  static WarningSink sink = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return sink;
}

}  // namespace

void set_warning_sink(WarningSink sink) {
  std::lock_guard lock(sink_mutex());
  sink_slot() = std::move(sink);
}

void warn(const std::string& message) {
  std::lock_guard lock(sink_mutex());
  if (sink_slot()) sink_slot()(message);
}

MultichannelSeries::MultichannelSeries(Matrix data, double fs_hz, std::vector<std::string> labels)
    : data_(std::move(data)), fs_hz_(fs_hz), labels_(std::move(labels)) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw InvalidInput("series must have at least one sample and one channel");
  }
  if (!(fs_hz_ > 0.0) || !std::isfinite(fs_hz_)) {
    throw InvalidInput("sampling rate must be positive and finite");
  }
  for (Index t = 0; t < data_.rows(); ++t) {
    for (Index c = 0; c < data_.cols(); ++c) {
      if (!std::isfinite(data_(t, c))) {
        std::ostringstream os;
        os << "non-finite value at row " << t << ", column " << c;
        throw InvalidInput(os.str());
      }
    }
  }
  if (labels_.empty()) {
    for (Index c = 0; c < data_.cols(); ++c) labels_.push_back("ch" + std::to_string(c));
  } else if (static_cast<Index>(labels_.size()) != data_.cols()) {
    throw InvalidInput("label count does not match channel count");
  }
}

MultichannelSeries MultichannelSeries::from_vector(const Vector& values, double fs_hz,
                                                   std::string label) {
  Matrix m(values.size(), 1);
  m.col(0) = values;
  return MultichannelSeries(std::move(m), fs_hz, {std::move(label)});
}

StateSequence::StateSequence(std::vector<int> states, double fs_hz)
    : states_(std::move(states)), fs_hz_(fs_hz) {
  if (!(fs_hz_ > 0.0) || !std::isfinite(fs_hz_)) {
    throw InvalidInput("sampling rate must be positive and finite");
  }
  for (std::size_t t = 0; t < states_.size(); ++t) {
    if (states_[t] != 1 && states_[t] != 2) {
      throw InvalidInput("state at index " + std::to_string(t) + " is not 1 or 2");
    }
  }
}

TransitionModel::TransitionModel(double p_stay, std::array<double, 2> initial)
    : p_stay_(p_stay), initial_(initial) {
  if (!(p_stay_ >= 0.0 && p_stay_ <= 1.0)) {
    throw InvalidInput("p_stay must lie in [0, 1]");
  }
  if (!(initial_[0] >= 0.0 && initial_[1] >= 0.0) ||
      std::abs(initial_[0] + initial_[1] - 1.0) > 1e-12) {
    throw InvalidInput("initial distribution must be non-negative and sum to 1");
  }
}

void MsmParams::validate() const {
  if (beta1.size() != beta2.size()) {
    throw InvalidInput("beta1 and beta2 have different lengths");
  }
  if (beta1.size() == 0) throw InvalidInput("regression coefficients are empty");
  if (!(sigma2_1 > 0.0) || !(sigma2_2 > 0.0) || !std::isfinite(sigma2_1) ||
      !std::isfinite(sigma2_2)) {
    throw InvalidInput("noise variances must be positive and finite");
  }
  if (!beta1.allFinite() || !beta2.allFinite()) {
    throw InvalidInput("regression coefficients must be finite");
  }
}

bool rows_are_distributions(const ProbMatrix& p, double tol) {
  for (Index t = 0; t < p.rows(); ++t) {
    if (p(t, 0) < 0.0 || p(t, 1) < 0.0 || p(t, 0) > 1.0 || p(t, 1) > 1.0) return false;
    if (std::abs(p(t, 0) + p(t, 1) - 1.0) > tol) return false;
  }
  return true;
}

}  // namespace msmaad
