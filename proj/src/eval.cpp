#include "msmaad/eval.hpp"

#include "msmaad/msm.hpp"

#include <algorithm>
#include <limits>

namespace msmaad {

double EvalReport::mean_switch_time_s() const {
  if (switch_times_s.empty()) return 0.0;
  double s = 0.0;
  for (double t : switch_times_s) s += t;
  return s / static_cast<double>(switch_times_s.size());
}

double decoding_accuracy(const StateSequence& pred, const StateSequence& truth) {
  if (pred.size() != truth.size()) {
    throw InvalidInput("prediction length " + std::to_string(pred.size()) +
                       " differs from truth length " + std::to_string(truth.size()));
  }
  if (truth.size() == 0) throw InvalidInput("cannot score an empty sequence");
  Index hits = 0;
  for (Index t = 0; t < truth.size(); ++t) hits += pred[t] == truth[t];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

SwitchDetection switch_detection_times(const ProbMatrix& probs, const StateSequence& truth,
                                       double fs_hz, Index min_hold_samples) {
  const Index n = truth.size();
  if (probs.rows() != n) throw InvalidInput("posterior and truth lengths differ");
  if (!(fs_hz > 0.0)) throw InvalidInput("sampling rate must be positive");
  if (min_hold_samples < 1) throw InvalidInput("min_hold_samples must be at least 1");

  std::array<std::vector<Index>, 2> crossings;
  for (int j = 0; j < 2; ++j) {
    for (Index tau = 1; tau + min_hold_samples <= n; ++tau) {
      if (!(probs(tau - 1, j) <= 0.5)) continue;
      bool held = true;
      for (Index h = 0; h < min_hold_samples && held; ++h) held = probs(tau + h, j) > 0.5;
      if (held) crossings[static_cast<std::size_t>(j)].push_back(tau);
    }
  }

  SwitchDetection out;
  for (Index t = 1; t < n; ++t) {
    if (truth[t] != truth[t - 1]) out.switch_samples.push_back(t);
  }
  const auto& sw = out.switch_samples;
  for (std::size_t k = 0; k < sw.size(); ++k) {
    const Index t = sw[k];
    Index interval = std::numeric_limits<Index>::max();
    if (k > 0) interval = std::min(interval, t - sw[k - 1]);
    if (k + 1 < sw.size()) interval = std::min(interval, sw[k + 1] - t);
    if (sw.size() == 1) interval = std::min(t, n - t);

    const auto& cands = crossings[static_cast<std::size_t>(truth[t] - 1)];
    Index best = std::numeric_limits<Index>::max();
    auto it = std::lower_bound(cands.begin(), cands.end(), t);
    // Earlier candidate first so equal distances resolve toward it.
    if (it != cands.begin()) best = t - *std::prev(it);
    if (it != cands.end() && *it - t < best) best = *it - t;

    if (best > interval) {
      out.times_s.push_back(static_cast<double>(interval) / fs_hz);
      ++out.missed;
    } else {
      out.times_s.push_back(static_cast<double>(best) / fs_hz);
    }
  }
  return out;
}

SwitchDetection switch_detection_times(const PosteriorSequence& posteriors,
                                       const StateSequence& truth, double fs_hz,
                                       Index min_hold_samples) {
  return switch_detection_times(posteriors.best(), truth, fs_hz, min_hold_samples);
}

AlignedPosteriors align_labels(const PosteriorSequence& posteriors, const StateSequence& truth) {
  const double fs = truth.fs_hz();
  const double straight = decoding_accuracy(decode_probs(posteriors.best(), fs), truth);
  ProbMatrix flipped_best = posteriors.best().rowwise().reverse();
  const double flipped = decoding_accuracy(decode_probs(flipped_best, fs), truth);
  AlignedPosteriors out{posteriors, false};
  if (flipped > straight) {
    out.swapped = true;
    out.posteriors.filtered = posteriors.filtered.rowwise().reverse();
    if (posteriors.smoothed) out.posteriors.smoothed = posteriors.smoothed->rowwise().reverse();
  }
  return out;
}

EvalReport evaluate(const PosteriorSequence& posteriors, const StateSequence& truth,
                    Index min_hold_samples) {
  EvalReport report;
  const double fs = truth.fs_hz();
  report.accuracy = decoding_accuracy(decode_probs(posteriors.best(), fs), truth);
  SwitchDetection det = switch_detection_times(posteriors, truth, fs, min_hold_samples);
  report.switch_times_s = std::move(det.times_s);
  report.missed_switches = det.missed;
  report.n_true_switches = static_cast<int>(det.switch_samples.size());
  return report;
}

StateSequence majority_downsample(const StateSequence& truth, Index first_sample,
                                  Index window_len_samples, Index windows) {
  if (window_len_samples < 1) throw InvalidInput("window length must be positive");
  if (first_sample < 0 || first_sample + windows * window_len_samples > truth.size()) {
    throw InvalidInput("windows extend beyond the truth sequence");
  }
  std::vector<int> out(static_cast<std::size_t>(windows));
  for (Index w = 0; w < windows; ++w) {
    const Index start = first_sample + w * window_len_samples;
    Index ones = 0;
    for (Index t = start; t < start + window_len_samples; ++t) ones += truth[t] == 1;
    const Index twos = window_len_samples - ones;
    out[static_cast<std::size_t>(w)] = ones == twos ? truth[start] : (ones > twos ? 1 : 2);
  }
  return StateSequence(std::move(out),
                       truth.fs_hz() / static_cast<double>(window_len_samples));
}

}  // namespace msmaad
