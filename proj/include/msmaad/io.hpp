// On-disk formats.
//
//   CSV     : header row of channel names, one row per sample, '.' decimal.
//   raw-f32 : little-endian binary32, row-major, no header, described by a
//             JSON sidecar "<path>.meta.json" {rows, cols, fs_hz, labels?}.
//
// Writers always emit the sidecar so CSV files also carry their rate.

#ifndef MSMAAD_IO_HPP
#define MSMAAD_IO_HPP

#include "msmaad/core.hpp"
#include "msmaad/embed.hpp"
#include "msmaad/eval.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>

namespace msmaad::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

enum class SeriesFormat { kCsv, kRawF32 };

// ".csv" -> CSV; ".f32", ".bin", ".raw" -> raw-f32.
SeriesFormat format_from_path(const fs::path& path);
fs::path sidecar_path(const fs::path& path);

// For CSV, the sampling rate comes from `fs_hz` if given, otherwise from the
// sidecar. For raw-f32 the sidecar is mandatory; `fs_hz`, when given, must
// agree with it.
MultichannelSeries load_series(const fs::path& path, SeriesFormat format,
                               std::optional<double> fs_hz = std::nullopt);
MultichannelSeries load_series(const fs::path& path, std::optional<double> fs_hz = std::nullopt);

void save_series(const MultichannelSeries& series, const fs::path& path, SeriesFormat format);
void save_series(const MultichannelSeries& series, const fs::path& path);

// States are stored as a single-column series named "state".
StateSequence load_states(const fs::path& path, std::optional<double> fs_hz = std::nullopt);
void save_states(const StateSequence& states, const fs::path& path);

Json report_to_json(const EvalReport& report);
void save_report(const EvalReport& report, const fs::path& path);

Json params_to_json(const MsmParams& params, Index lag_count, LagDirection direction);

struct DecoderFile {
  Vector beta;
  double mse = 0.0;
  Index lag_count = 1;
  LagDirection direction = LagDirection::kFuture;
};

Json decoder_to_json(const DecoderFile& decoder);
DecoderFile load_decoder(const fs::path& path);

// Posterior CSV: t, p1_filtered, p2_filtered[, p1_smoothed, p2_smoothed].
struct TimedPosteriors {
  std::vector<double> times_s;
  PosteriorSequence posteriors;
};

void save_posteriors(const TimedPosteriors& post, const fs::path& path);
// Also accepts a decoded-state CSV (t, state), read as one-hot posteriors.
TimedPosteriors load_posteriors(const fs::path& path);

void save_decoded(const std::vector<double>& times_s, const StateSequence& states,
                  const fs::path& path);

Json read_json(const fs::path& path);
void write_json(const Json& doc, const fs::path& path);
void write_text(const std::string& text, const fs::path& path);

}  // namespace msmaad::io

#endif  // MSMAAD_IO_HPP
