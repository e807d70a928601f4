#include "doctest.h"

#include "msmaad/msm.hpp"
#include "msmaad/synth.hpp"
#include "test_util.hpp"

#include <Eigen/QR>

#include <cmath>

using namespace msmaad;

namespace {

SyntheticSpec small_spec(std::uint64_t seed, Index n, double sigma2) {
  SyntheticSpec spec;
  spec.samples = n;
  spec.beta1 = random_unit_vector(8, seed);
  spec.beta2 = -spec.beta1;
  spec.sigma2_1 = sigma2;
  spec.sigma2_2 = sigma2;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("markov chain boundary cases") {
  const auto ones = sample_markov_chain(50, TransitionModel(1.0, {1.0, 0.0}), 3);
  CHECK(ones.states() == std::vector<int>(50, 1));
  const auto alt = sample_markov_chain(6, TransitionModel(0.0, {1.0, 0.0}), 3);
  CHECK(alt.states() == std::vector<int>{1, 2, 1, 2, 1, 2});
  CHECK_THROWS_AS(sample_markov_chain(0, TransitionModel(0.5), 1), InvalidInput);
}

TEST_CASE("markov chain switch rate matches the transition probability") {
  const Index n = 1000000;
  const auto s = sample_markov_chain(n, TransitionModel(0.999), 17);
  Index switches = 0;
  for (Index t = 1; t < n; ++t) switches += s[t] != s[t - 1];
  const double rate = static_cast<double>(switches) / static_cast<double>(n - 1);
  CHECK(rate >= 0.0008);
  CHECK(rate <= 0.0012);
}

TEST_CASE("generate_synthetic is reproducible and seed-dependent") {
  const auto a = generate_synthetic(small_spec(4, 500, 0.25));
  const auto b = generate_synthetic(small_spec(4, 500, 0.25));
  CHECK(a.eeg.data() == b.eeg.data());
  CHECK(a.env1.data() == b.env1.data());
  CHECK(a.env2.data() == b.env2.data());
  CHECK(a.states.states() == b.states.states());
  const auto c = generate_synthetic(small_spec(5, 500, 0.25));
  CHECK(a.eeg.data() != c.eeg.data());
}

TEST_CASE("envelope difference equals the regression plus realised noise") {
  for (auto dir : {LagDirection::kFuture, LagDirection::kPast}) {
    auto spec = small_spec(8, 700, 0.3);
    spec.direction = dir;
    spec.sigma2_2 = 0.7;
    spec.beta2 = random_unit_vector(8, 8, 8);
    const auto rec = generate_synthetic(spec);
    const auto d = lag_embed(rec.eeg, 2, dir);
    const Vector y = difference_observation(rec.env1, rec.env2, d);
    double worst = 0.0;
    for (Index k = 0; k < d.rows(); ++k) {
      const Index t = k + d.t_offset;
      const Vector& beta = rec.states[t] == 1 ? spec.beta1 : spec.beta2;
      worst = std::max(worst, std::abs(y(k) - d.data.row(k).dot(beta) - rec.noise(t)));
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("per-state regression recovers each coefficient vector at T = 50000") {
  auto spec = small_spec(21, 50000, 0.25);
  spec.beta2 = random_unit_vector(8, 21, 8);
  const auto rec = generate_synthetic(spec);
  const auto d = lag_embed(rec.eeg, 2);
  const Vector y = difference_observation(rec.env1, rec.env2, d);
  for (int state = 1; state <= 2; ++state) {
    std::vector<Index> rows;
    for (Index k = 0; k < d.rows(); ++k)
      if (rec.states[k + d.t_offset] == state) rows.push_back(k);
    if (rows.size() < 100) continue;  // chain stayed in one state
    Eigen::MatrixXd x(static_cast<Index>(rows.size()), 8);
    Eigen::VectorXd yy(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
      x.row(i) = d.data.row(rows[static_cast<std::size_t>(i)]);
      yy(i) = y(rows[static_cast<std::size_t>(i)]);
    }
    const Eigen::VectorXd est = x.colPivHouseholderQr().solve(yy);
    const Vector& truth = state == 1 ? spec.beta1 : spec.beta2;
    CHECK((est - truth).norm() / truth.norm() < 0.05);
  }
}

TEST_CASE("noiseless antipodal regimes decode perfectly per sample") {
  const auto rec = generate_synthetic(small_spec(9, 2000, 1e-12));
  const auto d = lag_embed(rec.eeg, 2);
  const Vector y = difference_observation(rec.env1, rec.env2, d);
  const auto map = map_states(emission_loglik(y, d, rec.true_params), rec.states.fs_hz());
  Index hits = 0;
  for (Index k = 0; k < d.rows(); ++k) hits += map[k] == rec.states[k + d.t_offset];
  CHECK(hits == d.rows());
}

TEST_CASE("segment swap: identity, full swap and structure") {
  const auto rec = generate_synthetic(small_spec(2, 300, 0.25));
  // Find seeds whose masks are all-false and all-true for 3 segments.
  std::optional<std::uint64_t> none, all;
  for (std::uint64_t s = 0; s < 1000 && (!none || !all); ++s) {
    const auto m = swap_mask(3, s);
    if (!none && !m[0] && !m[1] && !m[2]) none = s;
    if (!all && m[0] && m[1] && m[2]) all = s;
  }
  REQUIRE(none);
  REQUIRE(all);

  const auto id = segment_swap(rec.env1, rec.env2, rec.states, 10.0, *none);
  CHECK(id.env1.data() == rec.env1.data());
  CHECK(id.states.states() == rec.states.states());

  const auto full = segment_swap(rec.env1, rec.env2, rec.states, 10.0, *all);
  CHECK(full.env1.data() == rec.env2.data());
  CHECK(full.env2.data() == rec.env1.data());
  for (Index t = 0; t < 300; ++t) CHECK(full.states[t] == 3 - rec.states[t]);

  // 7 s segments at 10 Hz leave a trailing partial segment of 20 samples.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto sw = segment_swap(rec.env1, rec.env2, rec.states, 7.0, seed);
    REQUIRE(sw.swapped.size() == 5);
    bool ok = true;
    for (Index t = 0; t < 300; ++t) {
      const double before = rec.env1.data()(t, 0) - rec.env2.data()(t, 0);
      const double after = sw.env1.data()(t, 0) - sw.env2.data()(t, 0);
      const double sign = sw.swapped[static_cast<std::size_t>(t / 70)] ? -1.0 : 1.0;
      ok = ok && after == sign * before && std::abs(after) == std::abs(before);
    }
    CHECK(ok);
  }
  CHECK_THROWS_AS(segment_swap(rec.env1, rec.env2, rec.states, 0.01, 0), InvalidInput);
}
