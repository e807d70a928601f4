// Window-level comparison pipeline: least-squares decoder pretraining, an
// unsupervised two-component Gaussian mixture over pooled correlations, and
// HMM smoothing of the per-window correlation pairs.

#ifndef MSMAAD_BASELINE_HPP
#define MSMAAD_BASELINE_HPP

#include "msmaad/core.hpp"
#include "msmaad/embed.hpp"

#include <cstdint>
#include <vector>

namespace msmaad {

struct LsDecoder {
  Vector beta;
  double mse = 0.0;
};

// Ridge-regularised least squares reconstruction of the attended envelope.
LsDecoder train_ls_decoder(const LaggedDesign& design, const Vector& attended_env,
                           double ridge);

// Two-component 1-D Gaussian mixture; the component with the higher mean is
// the "attended" one.
struct Gmm2 {
  double mean_att = 0.0;
  double mean_unatt = 0.0;
  double var_att = 1.0;
  double var_unatt = 1.0;
  double weight_att = 0.5;
};

struct Gmm2Fit {
  Gmm2 model;
  // Mixture log-likelihood per EM iteration of the selected run.
  std::vector<double> loglik_trace;
};

inline constexpr double kGmmVarianceFloor = 1e-8;

// EM from a median split plus `restarts` random restarts; the run with the
// highest final log-likelihood wins.
Gmm2Fit fit_gmm2(const Vector& values, int max_iter = 500, double tol = 1e-10,
                 int restarts = 4, std::uint64_t seed = 0);

double gaussian_logpdf(double x, double mean, double var);

struct HmmResult {
  PosteriorSequence posteriors;
  StateSequence decoded;
  Index window_len_samples = 0;
};

// Per-window emissions: state 1 pairs (r1 attended, r2 unattended), state 2
// the mirror; then forward-backward at window rate.
HmmResult hmm_postprocess(const WindowedCorrelations& corrs, const Gmm2& gmm,
                          const TransitionModel& transition);

}  // namespace msmaad

#endif  // MSMAAD_BASELINE_HPP
