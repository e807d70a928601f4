// Sample-level decoding accuracy and switch-detection latency.

#ifndef MSMAAD_EVAL_HPP
#define MSMAAD_EVAL_HPP

#include "msmaad/core.hpp"

#include "json.hpp"

#include <vector>

namespace msmaad {

struct EvalReport {
  double accuracy = 0.0;
  std::vector<double> switch_times_s;
  int missed_switches = 0;
  int n_true_switches = 0;
  bool labels_swapped = false;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();

  // Arithmetic mean of switch_times_s; 0 when there are no switches.
  double mean_switch_time_s() const;
};

double decoding_accuracy(const StateSequence& pred, const StateSequence& truth);

struct SwitchDetection {
  std::vector<double> times_s;
  std::vector<Index> switch_samples;
  int missed = 0;
};

// For each true switch, the distance to the nearest upward 0.5-crossing of
// the newly attended state's posterior, searched over the whole recording.
// A crossing at tau requires p[tau] > 0.5 for min_hold_samples consecutive
// samples starting at tau and p[tau - 1] <= 0.5. Detections farther away
// than the gap to the neighbouring true switch (or no crossing at all) are
// missed and scored as that gap.
SwitchDetection switch_detection_times(const ProbMatrix& probs, const StateSequence& truth,
                                       double fs_hz, Index min_hold_samples = 1);
SwitchDetection switch_detection_times(const PosteriorSequence& posteriors,
                                       const StateSequence& truth, double fs_hz,
                                       Index min_hold_samples = 1);

struct AlignedPosteriors {
  PosteriorSequence posteriors;
  bool swapped = false;
};

// Swaps the state columns iff that strictly improves argmax accuracy.
AlignedPosteriors align_labels(const PosteriorSequence& posteriors, const StateSequence& truth);

// Accuracy of the argmax decision plus switch metrics in one report.
EvalReport evaluate(const PosteriorSequence& posteriors, const StateSequence& truth,
                    Index min_hold_samples = 1);

// Majority label of each window [first + w*len, first + (w+1)*len); ties go
// to the window's first sample. The result is sampled at fs / len.
StateSequence majority_downsample(const StateSequence& truth, Index first_sample,
                                  Index window_len_samples, Index windows);

}  // namespace msmaad

#endif  // MSMAAD_EVAL_HPP
