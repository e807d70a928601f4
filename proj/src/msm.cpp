#include "msmaad/msm.hpp"

#include "msmaad/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace msmaad {

namespace {

constexpr double kTieTolerance = 1e-15;

void check_lengths(const Vector& y, const LaggedDesign& design) {
  if (y.size() != design.rows()) {
    throw InvalidInput("observation length " + std::to_string(y.size()) +
                       " does not match design rows " + std::to_string(design.rows()));
  }
}

// Pr(S_t = j | y_1..y_{t-1}) from the previous filtered row.
std::array<double, 2> predict(const std::array<double, 2>& prev, const TransitionModel& tr) {
  return {prev[0] * tr.prob(0, 0) + prev[1] * tr.prob(1, 0),
          prev[0] * tr.prob(0, 1) + prev[1] * tr.prob(1, 1)};
}

double reestimate_p_stay(const PosteriorSequence& post, const TransitionModel& tr) {
  const ProbMatrix& f = post.filtered;
  const ProbMatrix& s = *post.smoothed;
  double stay = 0.0;
  double total = 0.0;
  for (Index t = 0; t + 1 < f.rows(); ++t) {
    const auto pred = predict({f(t, 0), f(t, 1)}, tr);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        if (pred[j] <= 0.0) continue;
        const double xi = f(t, i) * tr.prob(i, j) * s(t + 1, j) / pred[j];
        total += xi;
        if (i == j) stay += xi;
      }
    }
  }
  if (total <= 0.0) return tr.p_stay();
  return std::clamp(stay / total, 1e-12, 1.0 - 1e-12);
}

}  // namespace

EmissionLogLik emission_loglik(const Vector& y, const LaggedDesign& design,
                               const MsmParams& params) {
  check_lengths(y, design);
  if (!(params.sigma2_1 > 0.0) || !(params.sigma2_2 > 0.0)) {
    throw InvalidInput("noise variances must be positive");
  }
  if (params.beta1.size() != design.features() || params.beta2.size() != design.features()) {
    throw InvalidInput("coefficient length does not match design width");
  }
  EmissionLogLik out;
  out.loglik.resize(y.size(), 2);
  for (int i = 0; i < 2; ++i) {
    const double s2 = params.sigma2(i);
    const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi * s2);
    const Vector resid = y - design.data * params.beta(i);
    out.loglik.col(i) = (log_norm - resid.array().square() / (2.0 * s2)).matrix();
  }
  return out;
}

PosteriorSequence forward_pass(const EmissionLogLik& emissions,
                               const TransitionModel& transition) {
  const Index n = emissions.size();
  PosteriorSequence out;
  out.filtered.resize(n, 2);
  std::array<double, 2> prev = transition.initial();
  double loglik = 0.0;
  for (Index t = 0; t < n; ++t) {
    const double l0 = emissions.loglik(t, 0);
    const double l1 = emissions.loglik(t, 1);
    if (!std::isfinite(l0) || !std::isfinite(l1)) {
      throw NumericalError("non-finite emission log-likelihood at t=" + std::to_string(t));
    }
    const auto pred = predict(prev, transition);
    const double shift = std::max(l0, l1);
    const double w0 = pred[0] * std::exp(l0 - shift);
    const double w1 = pred[1] * std::exp(l1 - shift);
    const double norm = w0 + w1;
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw NumericalError("forward normaliser vanished at t=" + std::to_string(t));
    }
    prev = {w0 / norm, w1 / norm};
    out.filtered(t, 0) = prev[0];
    out.filtered(t, 1) = prev[1];
    loglik += shift + std::log(norm);
  }
  out.loglik = loglik;
  return out;
}

PosteriorSequence backward_smooth(const PosteriorSequence& filtered,
                                  const TransitionModel& transition) {
  const ProbMatrix& f = filtered.filtered;
  const Index n = f.rows();
  PosteriorSequence out;
  out.filtered = f;
  out.loglik = filtered.loglik;
  ProbMatrix s(n, 2);
  if (n == 0) {
    out.smoothed = std::move(s);
    return out;
  }
  s.row(n - 1) = f.row(n - 1);
  for (Index t = n - 2; t >= 0; --t) {
    const auto pred = predict({f(t, 0), f(t, 1)}, transition);
    // ratio_j = Pr(S_{t+1}=j | y_1..y_T) / Pr(S_{t+1}=j | y_1..y_t)
    std::array<double, 2> ratio{};
    for (int j = 0; j < 2; ++j) {
      if (pred[j] > 0.0) {
        ratio[j] = s(t + 1, j) / pred[j];
      } else if (s(t + 1, j) > 0.0) {
        throw NumericalError("backward smoother hit a zero predictive probability at t=" +
                             std::to_string(t));
      }
    }
    double row_sum = 0.0;
    for (int i = 0; i < 2; ++i) {
      s(t, i) = f(t, i) * (transition.prob(i, 0) * ratio[0] + transition.prob(i, 1) * ratio[1]);
      row_sum += s(t, i);
    }
    if (!(row_sum > 0.0)) {
      throw NumericalError("backward smoother produced an empty row at t=" + std::to_string(t));
    }
    s.row(t) /= row_sum;
  }
  out.smoothed = std::move(s);
  return out;
}

Vector m_step_beta(const LaggedDesign& design, const Vector& y, const Vector& weights,
                   std::optional<double> ridge) {
  check_lengths(y, design);
  if (weights.size() != y.size()) throw InvalidInput("weight length does not match observations");
  if (ridge && *ridge < 0.0) throw InvalidInput("ridge must be non-negative");
  if (!(weights.sum() > 0.0)) {
    throw NumericalError("state has zero total posterior weight; no data supports it");
  }
  Matrix gram = linalg::weighted_gram(design.data, weights);
  const Vector rhs = design.data.transpose() * weights.cwiseProduct(y);
  const double lambda =
      ridge ? *ridge : kDefaultRidgeScale * gram.trace() / static_cast<double>(gram.rows());
  gram.diagonal().array() += lambda;
  return linalg::solve_spd(gram, rhs);
}

double m_step_sigma(const LaggedDesign& design, const Vector& y, const Vector& beta,
                    const Vector& weights) {
  check_lengths(y, design);
  const double total = weights.sum();
  if (!(total > 0.0)) throw InvalidInput("weights must have a positive sum");
  const Vector resid = y - design.data * beta;
  const double s2 = weights.dot(resid.cwiseAbs2()) / total;
  return std::max(s2, kVarianceFloor);
}

MsmParams init_from_pretrained(const Vector& beta_star, double mse_star,
                               const TransitionModel& transition) {
  if (!(mse_star > 0.0) || !std::isfinite(mse_star)) {
    throw InvalidInput("pretrained decoder MSE must be positive");
  }
  if (beta_star.size() == 0) throw InvalidInput("pretrained decoder is empty");
  if (beta_star.isZero(0.0)) {
    warn("pretrained decoder is zero: both states start identical and EM cannot break the symmetry");
  }
  MsmParams p;
  p.beta1 = beta_star;
  p.beta2 = -beta_star;
  p.sigma2_1 = mse_star;
  p.sigma2_2 = mse_star;
  p.transition = transition;
  return p;
}

PosteriorSequence infer_states(const Vector& y, const LaggedDesign& design,
                               const MsmParams& params, bool smooth) {
  PosteriorSequence post = forward_pass(emission_loglik(y, design, params), params.transition);
  return smooth ? backward_smooth(post, params.transition) : post;
}

EmFitResult fit_em(const LaggedDesign& design, const Vector& y, const MsmParams& init,
                   const EmConfig& config) {
  init.validate();
  check_lengths(y, design);
  if (config.max_iter < 0) throw InvalidInput("max_iter must be non-negative");
  if (!(config.tol >= 0.0)) throw InvalidInput("tolerance must be non-negative");

  // One M-step from the smoothed posteriors of `from`.
  // `exact` drops the ridge and tolerates rank-deficient weighted designs.
  const auto m_step = [&](const MsmParams& from, const PosteriorSequence& post, bool exact) {
    MsmParams next = from;
    for (int i = 0; i < 2; ++i) {
      const Vector w = post.smoothed->col(i);
      Vector beta = exact ? linalg::weighted_min_norm_lstsq(design.data, y, w)
                          : m_step_beta(design, y, w, config.ridge);
      const double s2 = m_step_sigma(design, y, beta, w);
      (i == 0 ? next.beta1 : next.beta2) = std::move(beta);
      (i == 0 ? next.sigma2_1 : next.sigma2_2) = s2;
    }
    if (config.update_transition) {
      next.transition = TransitionModel(reestimate_p_stay(post, from.transition),
                                        from.transition.initial());
    }
    return next;
  };
  const bool regularised = !config.ridge || *config.ridge > 0.0;

  EmFitResult result;
  MsmParams params = init;
  PosteriorSequence post = infer_states(y, design, params, true);
  result.loglik_trace.push_back(post.loglik);
  while (result.iterations < config.max_iter) {
    const double prev = post.loglik;
    MsmParams next = m_step(params, post, false);
    PosteriorSequence next_post = infer_states(y, design, next, true);
    // The ridge maximises a penalised objective; when that costs observed
    // likelihood (typically a state collapsing onto few samples, where the
    // tiny variance magnifies the shrinkage), take the exact EM step.
    if (regularised && next_post.loglik < prev) {
      MsmParams exact = m_step(params, post, true);
      PosteriorSequence exact_post = infer_states(y, design, exact, true);
      if (exact_post.loglik > next_post.loglik) {
        next = std::move(exact);
        next_post = std::move(exact_post);
      }
    }
    const double ll = next_post.loglik;
    if (prev - ll > config.monotonic_slack) {
      std::ostringstream os;
      os.precision(17);
      os << "EM log-likelihood decreased at iteration " << result.iterations + 1 << ": " << prev
         << " -> " << ll << " (sigma2 = " << next.sigma2_1 << ", " << next.sigma2_2 << ")";
      throw NumericalError(os.str());
    }
    params = std::move(next);
    post = std::move(next_post);
    ++result.iterations;
    result.loglik_trace.push_back(ll);
    if (std::abs(ll - prev) / std::max(1.0, std::abs(ll)) < config.tol) {
      result.converged = true;
      break;
    }
  }
  result.params = std::move(params);
  result.posteriors = std::move(post);
  return result;
}

StateSequence decode_probs(const ProbMatrix& probs, double fs_hz) {
  std::vector<int> states(static_cast<std::size_t>(probs.rows()));
  int prev = 1;
  for (Index t = 0; t < probs.rows(); ++t) {
    const double diff = probs(t, 0) - probs(t, 1);
    int s;
    if (std::abs(diff) < kTieTolerance) {
      s = prev;
    } else {
      s = diff > 0.0 ? 1 : 2;
    }
    states[static_cast<std::size_t>(t)] = s;
    prev = s;
  }
  return StateSequence(std::move(states), fs_hz);
}

StateSequence decode(const PosteriorSequence& posteriors, bool use_smoothed, double fs_hz) {
  if (use_smoothed) {
    if (!posteriors.smoothed) throw InvalidInput("smoothed posteriors were not computed");
    return decode_probs(*posteriors.smoothed, fs_hz);
  }
  return decode_probs(posteriors.filtered, fs_hz);
}

StateSequence map_states(const EmissionLogLik& emissions, double fs_hz) {
  std::vector<int> states(static_cast<std::size_t>(emissions.size()));
  int prev = 1;
  for (Index t = 0; t < emissions.size(); ++t) {
    const double l0 = emissions.loglik(t, 0);
    const double l1 = emissions.loglik(t, 1);
    const int s = l0 == l1 ? prev : (l0 > l1 ? 1 : 2);
    states[static_cast<std::size_t>(t)] = s;
    prev = s;
  }
  return StateSequence(std::move(states), fs_hz);
}

}  // namespace msmaad
