#include "doctest.h"

#include "msmaad/baseline.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace msmaad;
using msmaad::testing::random_matrix;
using msmaad::testing::random_vector;

namespace {

LaggedDesign design_from(Matrix x) {
  LaggedDesign d;
  d.source_samples = x.rows();
  d.data = std::move(x);
  d.fs_hz = 10.0;
  return d;
}

WindowedCorrelations constant_corrs(Index windows, double r1, double r2) {
  WindowedCorrelations c;
  c.r1 = Vector::Constant(windows, r1);
  c.r2 = Vector::Constant(windows, r2);
  c.window_len_samples = 10;
  c.fs_hz = 10.0;
  return c;
}

}  // namespace

TEST_CASE("train_ls_decoder interpolates targets in the column span") {
  CounterRng rng(1, 0);
  const auto d = design_from(random_matrix(100, 6, rng));
  const Vector beta = random_vector(6, rng);
  const auto dec = train_ls_decoder(d, d.data * beta, 0.0);
  CHECK(dec.mse < 1e-18);
  CHECK((dec.beta - beta).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("train_ls_decoder with a zero design") {
  const auto d = design_from(Matrix::Zero(20, 3));
  const Vector y = Vector::LinSpaced(20, -1.0, 1.0);
  CHECK_THROWS_AS(train_ls_decoder(d, y, 0.0), NumericalError);
  const auto dec = train_ls_decoder(d, y, 0.5);
  CHECK(dec.beta.isZero(0.0));
}

TEST_CASE("train_ls_decoder matches the dense oracle; norm shrinks with ridge") {
  CounterRng rng(2, 0);
  const auto d = design_from(random_matrix(200, 6, rng));
  const Vector y = random_vector(200, rng);
  const auto dec = train_ls_decoder(d, y, 0.0);
  const Vector ref = oracle::weighted_normal_solve(d.data, y, Vector::Ones(200), 0.0);
  CHECK((dec.beta - ref).cwiseAbs().maxCoeff() < 1e-8);

  double prev = dec.beta.norm();
  for (double ridge : {1e-3, 1e-1, 1.0, 10.0, 100.0, 1e4}) {
    const double norm = train_ls_decoder(d, y, ridge).beta.norm();
    CHECK(norm <= prev + 1e-15);
    prev = norm;
  }
}

TEST_CASE("fit_gmm2 on a two-point symmetric set") {
  Vector v(4);
  v << -1, -1, 1, 1;
  const auto fit = fit_gmm2(v);
  CHECK(fit.model.mean_att == doctest::Approx(1.0));
  CHECK(fit.model.mean_unatt == doctest::Approx(-1.0));
  CHECK(fit.model.mean_att >= fit.model.mean_unatt);
}

TEST_CASE("fit_gmm2 recovers a known mixture") {
  CounterRng rng(12, 0);
  Vector v(500);
  for (Index i = 0; i < 500; ++i) {
    v(i) = rng.uniform() < 0.6 ? 0.3 + 0.1 * rng.normal() : -0.1 + 0.1 * rng.normal();
  }
  const auto fit = fit_gmm2(v, 500, 1e-10, 4, 1);
  CHECK(std::abs(fit.model.mean_att - 0.3) < 0.03);
  CHECK(std::abs(fit.model.mean_unatt + 0.1) < 0.03);
  for (std::size_t k = 1; k < fit.loglik_trace.size(); ++k) {
    CHECK(fit.loglik_trace[k] >= fit.loglik_trace[k - 1] - 1e-8);
  }
}

TEST_CASE("fit_gmm2 log-likelihood is monotone across random inputs (property)") {
  CounterRng rng(13, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 4 + static_cast<Index>(rng.next_u64() % 300);
    Vector v(n);
    const double m2 = 2.0 * rng.normal();
    for (Index i = 0; i < n; ++i) v(i) = rng.uniform() < 0.5 ? rng.normal() : m2 + 0.3 * rng.normal();
    const auto fit = fit_gmm2(v, 200, 1e-12, 2, static_cast<std::uint64_t>(trial));
    bool monotone = true;
    for (std::size_t k = 1; k < fit.loglik_trace.size(); ++k) {
      monotone = monotone && fit.loglik_trace[k] >= fit.loglik_trace[k - 1] - 1e-8;
    }
    CHECK(monotone);
    CHECK(fit.model.var_att >= kGmmVarianceFloor);
    CHECK(fit.model.var_unatt >= kGmmVarianceFloor);
    CHECK(fit.model.weight_att > 0.0);
    CHECK(fit.model.weight_att < 1.0);
  }
}

TEST_CASE("fit_gmm2 rejects degenerate input") {
  CHECK_THROWS_AS(fit_gmm2(Vector::Constant(10, 0.2)), InvalidInput);
  CHECK_THROWS_AS(fit_gmm2(Vector::LinSpaced(3, 0, 1)), InvalidInput);
}

TEST_CASE("hmm_postprocess on constant streams") {
  const Gmm2 gmm{0.3, 0.0, 0.01, 0.01, 0.5};
  const TransitionModel tr(1.0 - 1e-3);
  const auto att1 = hmm_postprocess(constant_corrs(50, 0.3, 0.0), gmm, tr);
  CHECK(att1.decoded.states() == std::vector<int>(50, 1));
  const auto att2 = hmm_postprocess(constant_corrs(50, 0.0, 0.3), gmm, tr);
  CHECK(att2.decoded.states() == std::vector<int>(50, 2));
  const auto flat = hmm_postprocess(constant_corrs(50, 0.15, 0.15), gmm, tr);
  CHECK((flat.posteriors.smoothed->array() - 0.5).abs().maxCoeff() < 1e-12);
  CHECK(rows_are_distributions(*att1.posteriors.smoothed));
  CHECK(att1.decoded.fs_hz() == doctest::Approx(1.0));
}

TEST_CASE("hmm_postprocess is equivariant under swapping the correlation streams") {
  CounterRng rng(14, 0);
  const Gmm2 gmm{0.25, 0.02, 0.012, 0.009, 0.5};
  const TransitionModel tr(0.95);
  for (int trial = 0; trial < 10; ++trial) {
    WindowedCorrelations c;
    c.r1.resize(80);
    c.r2.resize(80);
    for (Index w = 0; w < 80; ++w) {
      c.r1(w) = 0.1 + 0.15 * rng.normal();
      c.r2(w) = 0.1 + 0.15 * rng.normal();
    }
    c.window_len_samples = 10;
    c.fs_hz = 10.0;
    WindowedCorrelations s = c;
    std::swap(s.r1, s.r2);
    const auto a = hmm_postprocess(c, gmm, tr);
    const auto b = hmm_postprocess(s, gmm, tr);
    bool mirrored = true;
    for (Index w = 0; w < 80; ++w) mirrored = mirrored && a.decoded[w] == 3 - b.decoded[w];
    CHECK(mirrored);
  }
}
