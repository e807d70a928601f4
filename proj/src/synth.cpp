#include "msmaad/synth.hpp"

#include "msmaad/rng.hpp"

#include <cmath>
#include <string>

namespace msmaad {

StateSequence sample_markov_chain(Index samples, const TransitionModel& transition,
                                  std::uint64_t seed, double fs_hz) {
  if (samples < 1) throw InvalidInput("chain length must be at least 1");
  CounterRng rng(seed, streams::kChain);
  std::vector<int> states(static_cast<std::size_t>(samples));
  int s = rng.uniform() < transition.initial()[0] ? 1 : 2;
  states[0] = s;
  for (Index t = 1; t < samples; ++t) {
    if (!(rng.uniform() < transition.p_stay())) s = 3 - s;
    states[static_cast<std::size_t>(t)] = s;
  }
  return StateSequence(std::move(states), fs_hz);
}

Vector random_unit_vector(Index size, std::uint64_t seed, std::uint64_t stream) {
  if (size < 1) throw InvalidInput("vector size must be positive");
  CounterRng rng(seed, stream);
  Vector v(size);
  do {
    for (Index i = 0; i < size; ++i) v(i) = rng.normal();
  } while (v.norm() == 0.0);
  return v / v.norm();
}

SyntheticRecording generate_synthetic(const SyntheticSpec& spec) {
  const Index n = spec.samples;
  const Index c_count = spec.channels;
  const Index lags = spec.lag_count;
  if (n < 1 || c_count < 1 || lags < 1) {
    throw InvalidInput("samples, channels and lag_count must be positive");
  }
  if (n < lags) throw InvalidInput("recording shorter than the lag window");
  const Index width = c_count * lags;
  if (spec.beta1.size() != width || spec.beta2.size() != width) {
    throw InvalidInput("beta length must equal channels * lag_count = " + std::to_string(width));
  }
  if (!(spec.sigma2_1 >= 0.0) || !(spec.sigma2_2 >= 0.0)) {
    throw InvalidInput("noise variances must be non-negative");
  }
  if (!(std::abs(spec.eeg_ar_coeff) < 1.0)) throw InvalidInput("AR coefficient must be in (-1, 1)");

  CounterRng eeg_rng(spec.seed, streams::kEeg);
  Matrix x(n, c_count);
  const double a = spec.eeg_ar_coeff;
  const double innov = std::sqrt(1.0 - a * a);
  for (Index t = 0; t < n; ++t) {
    for (Index c = 0; c < c_count; ++c) {
      const double w = eeg_rng.normal();
      x(t, c) = t == 0 || a == 0.0 ? w : a * x(t - 1, c) + innov * w;
    }
  }

  StateSequence states = sample_markov_chain(n, spec.transition, spec.seed, spec.fs_hz);

  CounterRng noise_rng(spec.seed, streams::kNoise);
  CounterRng common_rng(spec.seed, streams::kCommon);
  const Index sign = spec.direction == LagDirection::kPast ? -1 : 1;
  Vector env1(n), env2(n), noise(n);
  for (Index t = 0; t < n; ++t) {
    const int s = states[t];
    const Vector& beta = s == 1 ? spec.beta1 : spec.beta2;
    const double sigma = std::sqrt(s == 1 ? spec.sigma2_1 : spec.sigma2_2);
    double pred = 0.0;
    for (Index c = 0; c < c_count; ++c) {
      for (Index l = 0; l < lags; ++l) {
        const Index src = t + sign * l;
        if (src >= 0 && src < n) pred += beta(c * lags + l) * x(src, c);
      }
    }
    const double e = sigma * noise_rng.normal();
    const double d = pred + e;
    const double g = common_rng.normal();
    noise(t) = e;
    env1(t) = 0.5 * (g + d);
    env2(t) = 0.5 * (g - d);
  }

  std::vector<std::string> labels;
  for (Index c = 0; c < c_count; ++c) labels.push_back("eeg" + std::to_string(c));

  MsmParams truth;
  truth.beta1 = spec.beta1;
  truth.beta2 = spec.beta2;
  truth.sigma2_1 = spec.sigma2_1;
  truth.sigma2_2 = spec.sigma2_2;
  truth.transition = spec.transition;

  return SyntheticRecording{MultichannelSeries(std::move(x), spec.fs_hz, std::move(labels)),
                            MultichannelSeries::from_vector(env1, spec.fs_hz, "env1"),
                            MultichannelSeries::from_vector(env2, spec.fs_hz, "env2"),
                            std::move(states),
                            std::move(truth),
                            spec.seed,
                            std::move(noise)};
}

std::vector<bool> swap_mask(Index segments, std::uint64_t seed) {
  CounterRng rng(seed, streams::kSwap);
  std::vector<bool> mask(static_cast<std::size_t>(std::max<Index>(segments, 0)));
  for (auto&& m : mask) m = rng.uniform() < 0.5;
  return mask;
}

SwapResult segment_swap(const MultichannelSeries& env1, const MultichannelSeries& env2,
                        const StateSequence& states, double segment_len_s, std::uint64_t seed) {
  if (env1.channels() != 1 || env2.channels() != 1) {
    throw InvalidInput("envelopes must be single-channel");
  }
  const Index n = env1.samples();
  if (env2.samples() != n || states.size() != n) {
    throw InvalidInput("envelopes and states must have equal length");
  }
  const Index seg = static_cast<Index>(std::llround(segment_len_s * env1.fs_hz()));
  if (seg < 1) throw InvalidInput("segment must contain at least one sample");
  const Index segments = (n + seg - 1) / seg;
  std::vector<bool> mask = swap_mask(segments, seed);

  Vector a = env1.data().col(0);
  Vector b = env2.data().col(0);
  std::vector<int> s = states.states();
  for (Index k = 0; k < segments; ++k) {
    if (!mask[static_cast<std::size_t>(k)]) continue;
    const Index start = k * seg;
    const Index len = std::min(seg, n - start);
    a.segment(start, len).swap(b.segment(start, len));
    for (Index t = start; t < start + len; ++t) {
      auto& v = s[static_cast<std::size_t>(t)];
      v = 3 - v;
    }
  }
  return SwapResult{MultichannelSeries::from_vector(a, env1.fs_hz(), env1.labels()[0]),
                    MultichannelSeries::from_vector(b, env2.fs_hz(), env2.labels()[0]),
                    StateSequence(std::move(s), states.fs_hz()), std::move(mask)};
}

}  // namespace msmaad
