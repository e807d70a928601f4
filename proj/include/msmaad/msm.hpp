// Two-state Markov switching linear regression.
//
// Observation model: y_t = beta_{S_t}^T x_t + e_t, e_t ~ N(0, sigma2_{S_t}),
// with S_t a symmetric first-order Markov chain. State posteriors come from a
// per-step normalised forward recursion followed by the backward smoother;
// parameters {beta_1, beta_2, sigma2_1, sigma2_2} are fitted by EM while
// the chain parameters stay fixed unless re-estimation is requested.

#ifndef MSMAAD_MSM_HPP
#define MSMAAD_MSM_HPP

#include "msmaad/core.hpp"
#include "msmaad/embed.hpp"

#include <optional>
#include <vector>

namespace msmaad {

// Entry (t, i) = log f(y_t | S_t = i + 1).
struct EmissionLogLik {
  ProbMatrix loglik;
  Index size() const { return loglik.rows(); }
};

EmissionLogLik emission_loglik(const Vector& y, const LaggedDesign& design,
                               const MsmParams& params);

// Filtered posteriors Pr(S_t | y_1..y_t) and the observed-data
// log-likelihood sum_t log f(y_t | y_1..y_{t-1}).
PosteriorSequence forward_pass(const EmissionLogLik& emissions,
                               const TransitionModel& transition);

// Adds smoothed posteriors Pr(S_t | y_1..y_T) to a filtered sequence.
PosteriorSequence backward_smooth(const PosteriorSequence& filtered,
                                  const TransitionModel& transition);

// Default ridge: 1e-6 times the mean diagonal of the weighted Gram matrix.
inline constexpr double kDefaultRidgeScale = 1e-6;
inline constexpr double kVarianceFloor = 1e-10;

// Weighted ridge regression (sum_t w_t x_t x_t^T + ridge I) beta = sum_t w_t x_t y_t.
// `ridge` unset selects the default scale above.
Vector m_step_beta(const LaggedDesign& design, const Vector& y, const Vector& weights,
                   std::optional<double> ridge = std::nullopt);

// Weighted mean squared residual, floored at kVarianceFloor.
double m_step_sigma(const LaggedDesign& design, const Vector& y, const Vector& beta,
                    const Vector& weights);

// beta1 = beta*, beta2 = -beta*, both variances = mse*.
MsmParams init_from_pretrained(const Vector& beta_star, double mse_star,
                               const TransitionModel& transition);

struct EmConfig {
  int max_iter = 100;
  double tol = 1e-6;
  // A regularised step that lowers the observed log-likelihood is replaced
  // by the unregularised one.
  std::optional<double> ridge;
  bool update_transition = false;
  // A log-likelihood drop larger than this aborts the fit.
  double monotonic_slack = 1e-6;
};

struct EmFitResult {
  MsmParams params;
  PosteriorSequence posteriors;
  // Observed-data log-likelihood at each visited parameter set; the last
  // entry belongs to `params`.
  std::vector<double> loglik_trace;
  int iterations = 0;
  bool converged = false;
};

// Runs one E-step: emissions, forward pass and (optionally) smoothing.
PosteriorSequence infer_states(const Vector& y, const LaggedDesign& design,
                               const MsmParams& params, bool smooth = true);

EmFitResult fit_em(const LaggedDesign& design, const Vector& y, const MsmParams& init,
                   const EmConfig& config = {});

// Per-sample argmax. Exact ties (|p1 - p2| < 1e-15) keep the previous
// decision; a tie at t = 0 resolves to state 1.
StateSequence decode(const PosteriorSequence& posteriors, bool use_smoothed, double fs_hz);
StateSequence decode_probs(const ProbMatrix& probs, double fs_hz);

// Per-sample maximum-likelihood state, ignoring the chain. This is the
// "raw decoder" decision without temporal smoothing.
StateSequence map_states(const EmissionLogLik& emissions, double fs_hz);

}  // namespace msmaad

#endif  // MSMAAD_MSM_HPP
