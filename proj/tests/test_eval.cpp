#include "doctest.h"

#include "msmaad/eval.hpp"
#include "msmaad/msm.hpp"
#include "test_util.hpp"

using namespace msmaad;

namespace {

StateSequence seq(std::vector<int> v, double fs = 10.0) { return StateSequence(std::move(v), fs); }

// State-2 posterior column is 0.1 before `cross` and 0.9 from it on.
ProbMatrix step_probs(Index n, Index cross) {
  ProbMatrix p(n, 2);
  for (Index t = 0; t < n; ++t) {
    const double p2 = t >= cross ? 0.9 : 0.1;
    p(t, 0) = 1.0 - p2;
    p(t, 1) = p2;
  }
  return p;
}

StateSequence step_truth(Index n, Index at) {
  std::vector<int> v(static_cast<std::size_t>(n), 1);
  for (Index t = at; t < n; ++t) v[static_cast<std::size_t>(t)] = 2;
  return seq(v);
}

PosteriorSequence onehot(const StateSequence& s) {
  PosteriorSequence p;
  p.filtered.resize(s.size(), 2);
  for (Index t = 0; t < s.size(); ++t) {
    p.filtered(t, 0) = s[t] == 1 ? 1.0 : 0.0;
    p.filtered(t, 1) = s[t] == 2 ? 1.0 : 0.0;
  }
  return p;
}

}  // namespace

TEST_CASE("decoding accuracy examples") {
  CHECK(decoding_accuracy(seq({1, 2, 2}), seq({1, 2, 2})) == 1.0);
  CHECK(decoding_accuracy(seq({2, 1, 1}), seq({1, 2, 2})) == 0.0);
  CHECK(decoding_accuracy(seq({1, 2, 2, 1}), seq({1, 1, 2, 2})) == 0.5);
  CHECK_THROWS_AS(decoding_accuracy(seq({1}), seq({1, 2})), InvalidInput);
}

TEST_CASE("switch detection: exact, early and missed") {
  const auto truth = step_truth(200, 100);
  auto exact = switch_detection_times(step_probs(200, 100), truth, 10.0);
  REQUIRE(exact.times_s.size() == 1);
  CHECK(exact.times_s[0] == 0.0);
  CHECK(exact.missed == 0);

  auto early = switch_detection_times(step_probs(200, 80), truth, 10.0);
  CHECK(early.times_s[0] == 2.0);
  CHECK(early.missed == 0);

  // Switches at 600 and 1200 samples (60 s apart at 10 Hz); the second
  // switch (2 -> 1) has 60 s gaps on both sides up to the third.
  std::vector<int> v(2400, 1);
  for (Index t = 600; t < 1200; ++t) v[static_cast<std::size_t>(t)] = 2;
  for (Index t = 1800; t < 2400; ++t) v[static_cast<std::size_t>(t)] = 2;
  const auto three = seq(v);
  ProbMatrix p = onehot(three).filtered;
  // From sample 600 on the posterior sticks to state 2, so state 1 never
  // crosses upward and the third switch's only candidate is 120 s away.
  for (Index t = 600; t < 2400; ++t) {
    p(t, 0) = 0.0;
    p(t, 1) = 1.0;
  }
  const auto det = switch_detection_times(p, three, 10.0);
  REQUIRE(det.times_s.size() == 3);
  CHECK(det.times_s[0] == 0.0);
  CHECK(det.times_s[1] == 60.0);
  CHECK(det.times_s[2] == 60.0);
  CHECK(det.missed == 2);
}

TEST_CASE("switch detection: ties go to the earlier crossing, hold filter") {
  const auto truth = step_truth(40, 20);
  ProbMatrix p = step_probs(40, 100);  // never crosses
  // Two upward crossings of state 2 at 15 and 25, dipping in between.
  for (Index t = 15; t < 18; ++t) p.row(t) << 0.2, 0.8;
  for (Index t = 25; t < 40; ++t) p.row(t) << 0.2, 0.8;
  const auto det = switch_detection_times(p, truth, 10.0);
  CHECK(det.times_s[0] == doctest::Approx(0.5));
  CHECK(det.missed == 0);
  // A hold of 5 samples discards the short excursion at 15.
  const auto held = switch_detection_times(p, truth, 10.0, 5);
  CHECK(held.times_s[0] == doctest::Approx(0.5));

  ProbMatrix q = step_probs(40, 100);
  for (Index t = 15; t < 18; ++t) q.row(t) << 0.2, 0.8;
  for (Index t = 27; t < 40; ++t) q.row(t) << 0.2, 0.8;
  CHECK(switch_detection_times(q, truth, 10.0).times_s[0] == doctest::Approx(0.5));
  CHECK(switch_detection_times(q, truth, 10.0, 5).times_s[0] == doctest::Approx(0.7));
}

TEST_CASE("switch detection without switches is empty") {
  const auto det = switch_detection_times(step_probs(30, 100), seq(std::vector<int>(30, 1)), 10.0);
  CHECK(det.times_s.empty());
  CHECK(det.missed == 0);
  EvalReport r = evaluate(onehot(seq(std::vector<int>(30, 1))), seq(std::vector<int>(30, 1)));
  CHECK(r.n_true_switches == 0);
  CHECK(r.mean_switch_time_s() == 0.0);
}

TEST_CASE("perfect posteriors give zero detection times (property)") {
  CounterRng rng(31, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.next_u64() % 300);
    std::vector<int> v(static_cast<std::size_t>(n));
    int s = rng.uniform() < 0.5 ? 1 : 2;
    for (auto& x : v) {
      if (rng.uniform() < 0.05) s = 3 - s;
      x = s;
    }
    const auto truth = seq(v);
    const auto r = evaluate(onehot(truth), truth);
    CHECK(r.accuracy == 1.0);
    CHECK(r.missed_switches == 0);
    bool zeros = true;
    for (double t : r.switch_times_s) zeros = zeros && t == 0.0;
    CHECK(zeros);
    CHECK(static_cast<int>(r.switch_times_s.size()) == r.n_true_switches);
  }
}

TEST_CASE("detection times never exceed the inter-switch interval (property)") {
  CounterRng rng(32, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 50 + static_cast<Index>(rng.next_u64() % 300);
    std::vector<int> v(static_cast<std::size_t>(n));
    int s = 1;
    for (auto& x : v) {
      if (rng.uniform() < 0.03) s = 3 - s;
      x = s;
    }
    const auto truth = seq(v);
    ProbMatrix p(n, 2);
    for (Index t = 0; t < n; ++t) {
      const double a = rng.uniform();
      p.row(t) << a, 1.0 - a;
    }
    const auto det = switch_detection_times(p, truth, 10.0);
    const auto& sw = det.switch_samples;
    for (std::size_t k = 0; k < sw.size(); ++k) {
      Index interval = sw.size() == 1 ? std::min(sw[k], n - sw[k]) : n;
      if (k > 0) interval = std::min(interval, sw[k] - sw[k - 1]);
      if (k + 1 < sw.size()) interval = std::min(interval, sw[k + 1] - sw[k]);
      CHECK(det.times_s[k] <= static_cast<double>(interval) / 10.0 + 1e-12);
    }
  }
}

TEST_CASE("align_labels examples") {
  const auto truth = seq({1, 1, 1, 1, 1, 1, 1, 1, 1, 1});
  auto make = [&](int correct) {
    std::vector<int> v(10, 2);
    for (int i = 0; i < correct; ++i) v[static_cast<std::size_t>(i)] = 1;
    return onehot(seq(v));
  };
  auto a = align_labels(make(9), truth);
  CHECK_FALSE(a.swapped);
  CHECK(a.posteriors.filtered == make(9).filtered);
  auto b = align_labels(make(2), truth);
  CHECK(b.swapped);
  CHECK(decoding_accuracy(decode(b.posteriors, false, 10.0), truth) == doctest::Approx(0.8));
  auto c = align_labels(make(5), truth);
  CHECK_FALSE(c.swapped);
}

TEST_CASE("align_labels picks the better orientation (property)") {
  CounterRng rng(33, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.next_u64() % 100);
    std::vector<int> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = rng.uniform() < 0.5 ? 1 : 2;
    const auto truth = seq(v);
    PosteriorSequence p;
    p.filtered.resize(n, 2);
    for (Index t = 0; t < n; ++t) {
      const double q = rng.uniform();
      p.filtered.row(t) << q, 1.0 - q;
    }
    const double acc = decoding_accuracy(decode_probs(p.filtered, 10.0), truth);
    const ProbMatrix flipped = p.filtered.rowwise().reverse();
    const double facc = decoding_accuracy(decode_probs(flipped, 10.0), truth);
    const auto al = align_labels(p, truth);
    const double after = decoding_accuracy(decode_probs(al.posteriors.filtered, 10.0), truth);
    CHECK(after >= 0.5 * (acc + facc));
  }
}

TEST_CASE("majority downsampling") {
  const auto truth = seq({1, 1, 2, 2, 2, 2, 1, 1, 1, 2, 2, 1});
  const auto w = majority_downsample(truth, 0, 4, 3);
  CHECK(w.states() == std::vector<int>{1, 2, 1});
  CHECK(w.fs_hz() == doctest::Approx(2.5));
  CHECK(majority_downsample(truth, 1, 3, 3).states() == std::vector<int>{2, 2, 1});
  CHECK_THROWS_AS(majority_downsample(truth, 0, 5, 3), InvalidInput);
  CHECK(decoding_accuracy(seq({1, 2}), seq({2, 1})) == decoding_accuracy(seq({2, 1}), seq({1, 2})));
}
