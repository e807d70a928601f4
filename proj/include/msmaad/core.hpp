// Domain types shared by every stage of the decoding pipeline.
//
// Conventions used throughout the library:
//   * time-major storage: row t of any matrix is sample t;
//   * attention states are labelled 1 and 2 at the API surface, while
//     posterior matrices store state 1 in column 0 and state 2 in column 1;
//   * all arithmetic is done in double precision.

#ifndef MSMAAD_CORE_HPP
#define MSMAAD_CORE_HPP

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace msmaad {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ProbMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed files, inconsistent dimensions, violated
// preconditions. The CLI maps these to exit code 2.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A numerical procedure could not produce a meaningful result (singular
// system, underflowed normalizer, non-monotone EM). CLI exit code 1.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Warnings go through a replaceable sink; the default prints to stderr.
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

class MultichannelSeries {
 public:
  MultichannelSeries(Matrix data, double fs_hz, std::vector<std::string> labels = {});

  const Matrix& data() const { return data_; }
  Index samples() const { return data_.rows(); }
  Index channels() const { return data_.cols(); }
  double fs_hz() const { return fs_hz_; }
  const std::vector<std::string>& labels() const { return labels_; }

  Vector channel(Index c) const { return data_.col(c); }

  // Single-channel convenience constructor.
  static MultichannelSeries from_vector(const Vector& values, double fs_hz,
                                        std::string label = "ch0");

 private:
  Matrix data_;
  double fs_hz_;
  std::vector<std::string> labels_;
};

class StateSequence {
 public:
  StateSequence(std::vector<int> states, double fs_hz);

  const std::vector<int>& states() const { return states_; }
  Index size() const { return static_cast<Index>(states_.size()); }
  int operator[](Index t) const { return states_[static_cast<std::size_t>(t)]; }
  double fs_hz() const { return fs_hz_; }

 private:
  std::vector<int> states_;
  double fs_hz_;
};

// Symmetric two-state Markov chain: p11 = p22 = p_stay.
//
// `initial` is the distribution of the pre-sample state S_0; the first
// observation's prior is obtained by one transition from it. p_stay may be
// 0 or 1 (deterministic chains are useful for simulation); inference
// routines report the resulting impossible configurations as errors.
class TransitionModel {
 public:
  explicit TransitionModel(double p_stay, std::array<double, 2> initial = {0.5, 0.5});

  double p_stay() const { return p_stay_; }
  double p_switch() const { return 1.0 - p_stay_; }
  const std::array<double, 2>& initial() const { return initial_; }

  // Pr(S_t = to | S_{t-1} = from), zero-based state indices.
  double prob(int from, int to) const { return from == to ? p_stay_ : 1.0 - p_stay_; }

 private:
  double p_stay_;
  std::array<double, 2> initial_;
};

struct MsmParams {
  Vector beta1;
  Vector beta2;
  double sigma2_1 = 1.0;
  double sigma2_2 = 1.0;
  TransitionModel transition{0.5};

  const Vector& beta(int state_index) const { return state_index == 0 ? beta1 : beta2; }
  double sigma2(int state_index) const { return state_index == 0 ? sigma2_1 : sigma2_2; }

  // Throws InvalidInput if the invariants do not hold.
  void validate() const;
};

struct PosteriorSequence {
  ProbMatrix filtered;
  std::optional<ProbMatrix> smoothed;
  double loglik = 0.0;

  Index size() const { return filtered.rows(); }
  // Smoothed probabilities when present, otherwise filtered ones.
  const ProbMatrix& best() const { return smoothed ? *smoothed : filtered; }
};

// Row-normalisation check used by tests and validators.
bool rows_are_distributions(const ProbMatrix& p, double tol = 1e-12);

}  // namespace msmaad

#endif  // MSMAAD_CORE_HPP
