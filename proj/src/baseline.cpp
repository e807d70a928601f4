#include "msmaad/baseline.hpp"

#include "msmaad/msm.hpp"
#include "msmaad/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace msmaad {

LsDecoder train_ls_decoder(const LaggedDesign& design, const Vector& attended_env,
                           double ridge) {
  if (attended_env.size() != design.rows()) {
    throw InvalidInput("attended envelope length does not match design rows");
  }
  if (design.rows() == 0) throw InvalidInput("empty training design");
  const Vector ones = Vector::Ones(design.rows());
  LsDecoder out;
  out.beta = m_step_beta(design, attended_env, ones, ridge);
  out.mse = (attended_env - design.data * out.beta).squaredNorm() /
            static_cast<double>(design.rows());
  return out;
}

double gaussian_logpdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - d * d / (2.0 * var);
}

namespace {

struct MixtureState {
  std::array<double, 2> mean;
  std::array<double, 2> var;
  std::array<double, 2> weight;
};

struct RunResult {
  MixtureState state;
  std::vector<double> trace;
};

double variance_of(const std::vector<double>& v, double mean) {
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

RunResult run_em(const Vector& x, MixtureState st, int max_iter, double tol) {
  const Index n = x.size();
  Eigen::ArrayXd resp(n);
  RunResult out;
  for (int it = 0; it <= max_iter; ++it) {
    double ll = 0.0;
    for (Index t = 0; t < n; ++t) {
      const double a = std::log(st.weight[0]) + gaussian_logpdf(x(t), st.mean[0], st.var[0]);
      const double b = std::log(st.weight[1]) + gaussian_logpdf(x(t), st.mean[1], st.var[1]);
      const double m = std::max(a, b);
      const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
      resp(t) = std::exp(a - lse);
      ll += lse;
    }
    const bool done = !out.trace.empty() &&
                      std::abs(ll - out.trace.back()) < tol * std::max(1.0, std::abs(ll));
    out.trace.push_back(ll);
    if (done || it == max_iter) break;

    const double n0 = resp.sum();
    const double n1 = static_cast<double>(n) - n0;
    if (n0 <= 0.0 || n1 <= 0.0) break;  // one component absorbed everything
    const Eigen::ArrayXd xa = x.array();
    st.mean[0] = (resp * xa).sum() / n0;
    st.mean[1] = ((1.0 - resp) * xa).sum() / n1;
    st.var[0] = std::max((resp * (xa - st.mean[0]).square()).sum() / n0, kGmmVarianceFloor);
    st.var[1] =
        std::max(((1.0 - resp) * (xa - st.mean[1]).square()).sum() / n1, kGmmVarianceFloor);
    st.weight[0] = n0 / static_cast<double>(n);
    st.weight[1] = n1 / static_cast<double>(n);
  }
  out.state = st;
  return out;
}

}  // namespace

Gmm2Fit fit_gmm2(const Vector& values, int max_iter, double tol, int restarts,
                 std::uint64_t seed) {
  const Index n = values.size();
  if (n < 4) throw InvalidInput("need at least 4 values to fit a two-component mixture");
  if (!values.allFinite()) throw InvalidInput("mixture input contains non-finite values");
  if (values.maxCoeff() == values.minCoeff()) {
    throw InvalidInput("all values are identical; no mixture structure to fit");
  }
  if (max_iter < 1 || restarts < 0) throw InvalidInput("invalid mixture EM settings");

  std::vector<double> sorted(values.data(), values.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t half = sorted.size() / 2;
  const std::vector<double> lower(sorted.begin(), sorted.begin() + static_cast<long>(half));
  const std::vector<double> upper(sorted.begin() + static_cast<long>(half), sorted.end());
  const auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };

  MixtureState init;
  init.mean = {mean_of(lower), mean_of(upper)};
  init.var = {std::max(variance_of(lower, init.mean[0]), kGmmVarianceFloor),
              std::max(variance_of(upper, init.mean[1]), kGmmVarianceFloor)};
  init.weight = {0.5, 0.5};
  RunResult best = run_em(values, init, max_iter, tol);

  const double overall_mean = values.mean();
  const double overall_var =
      std::max((values.array() - overall_mean).square().mean(), kGmmVarianceFloor);
  CounterRng rng(seed, streams::kGmmRestart);
  for (int r = 0; r < restarts; ++r) {
    MixtureState st;
    const auto pick = [&] {
      return values(static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(n)));
    };
    st.mean = {pick(), pick()};
    if (st.mean[0] == st.mean[1]) st.mean[1] += std::sqrt(overall_var);
    st.var = {overall_var, overall_var};
    st.weight = {0.5, 0.5};
    RunResult run = run_em(values, st, max_iter, tol);
    if (run.trace.back() > best.trace.back()) best = std::move(run);
  }

  const MixtureState& st = best.state;
  const int att = st.mean[0] >= st.mean[1] ? 0 : 1;
  const int un = 1 - att;
  Gmm2Fit fit;
  fit.model = {st.mean[att], st.mean[un], st.var[att], st.var[un], st.weight[att]};
  fit.loglik_trace = std::move(best.trace);
  return fit;
}

HmmResult hmm_postprocess(const WindowedCorrelations& corrs, const Gmm2& gmm,
                          const TransitionModel& transition) {
  if (!(gmm.var_att > 0.0) || !(gmm.var_unatt > 0.0)) {
    throw InvalidInput("mixture variances must be positive");
  }
  if (gmm.mean_att < gmm.mean_unatt) {
    throw InvalidInput("attended mixture mean must not be below the unattended mean");
  }
  if (corrs.windows() == 0) throw InvalidInput("no complete correlation windows");
  EmissionLogLik em;
  em.loglik.resize(corrs.windows(), 2);
  for (Index w = 0; w < corrs.windows(); ++w) {
    const double r1 = corrs.r1(w);
    const double r2 = corrs.r2(w);
    em.loglik(w, 0) = gaussian_logpdf(r1, gmm.mean_att, gmm.var_att) +
                      gaussian_logpdf(r2, gmm.mean_unatt, gmm.var_unatt);
    em.loglik(w, 1) = gaussian_logpdf(r1, gmm.mean_unatt, gmm.var_unatt) +
                      gaussian_logpdf(r2, gmm.mean_att, gmm.var_att);
  }
  PosteriorSequence post = backward_smooth(forward_pass(em, transition), transition);
  const double window_rate = corrs.fs_hz / static_cast<double>(corrs.window_len_samples);
  StateSequence decoded = decode(post, true, window_rate);
  return HmmResult{std::move(post), std::move(decoded), corrs.window_len_samples};
}

}  // namespace msmaad
