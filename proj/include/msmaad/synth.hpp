// Synthetic recordings drawn from the switching-regression model, plus the
// per-segment speaker swap used to multiply attention switches.

#ifndef MSMAAD_SYNTH_HPP
#define MSMAAD_SYNTH_HPP

#include "msmaad/core.hpp"
#include "msmaad/embed.hpp"

#include <cstdint>
#include <vector>

namespace msmaad {

StateSequence sample_markov_chain(Index samples, const TransitionModel& transition,
                                  std::uint64_t seed, double fs_hz = 1.0);

struct SyntheticSpec {
  Index samples = 6000;
  Index channels = 4;
  Index lag_count = 2;
  LagDirection direction = LagDirection::kFuture;
  double fs_hz = 10.0;
  Vector beta1;
  Vector beta2;
  double sigma2_1 = 0.25;
  double sigma2_2 = 0.25;
  TransitionModel transition{1.0 - 1e-3};
  std::uint64_t seed = 0;
  // AR(1) coefficient of the EEG surrogate; 0 gives white noise.
  double eeg_ar_coeff = 0.0;
};

struct SyntheticRecording {
  MultichannelSeries eeg;
  MultichannelSeries env1;
  MultichannelSeries env2;
  StateSequence states;
  MsmParams true_params;
  std::uint64_t seed = 0;
  // y_t - beta_{S_t}^T x_t for every sample (the realised noise).
  Vector noise;
};

// Samples whose lag window runs past the recording use the available lags
// only; the regression identity is exact on every row of lag_embed.
SyntheticRecording generate_synthetic(const SyntheticSpec& spec);

// Unit-norm random direction of the given size, deterministic in `seed`.
Vector random_unit_vector(Index size, std::uint64_t seed, std::uint64_t stream = 7);

struct SwapResult {
  MultichannelSeries env1;
  MultichannelSeries env2;
  StateSequence states;
  std::vector<bool> swapped;  // one flag per segment
};

// Per-segment swap decisions; a fair coin per segment.
std::vector<bool> swap_mask(Index segments, std::uint64_t seed);

SwapResult segment_swap(const MultichannelSeries& env1, const MultichannelSeries& env2,
                        const StateSequence& states, double segment_len_s, std::uint64_t seed);

}  // namespace msmaad

#endif  // MSMAAD_SYNTH_HPP
