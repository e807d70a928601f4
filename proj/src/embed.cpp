#include "msmaad/embed.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace msmaad {

namespace {

constexpr double kVarianceGuard = 1e-12;

void check_envelope(const MultichannelSeries& env, const LaggedDesign& design,
                    const char* name) {
  if (env.channels() != 1) {
    throw InvalidInput(std::string(name) + " must be single-channel");
  }
  if (env.samples() != design.source_samples) {
    throw InvalidInput(std::string(name) + " length " + std::to_string(env.samples()) +
                       " does not match EEG length " + std::to_string(design.source_samples));
  }
  if (env.fs_hz() != design.fs_hz) {
    throw InvalidInput(std::string(name) + " sampling rate differs from the EEG");
  }
}

}  // namespace

std::string_view to_string(LagDirection d) {
  return d == LagDirection::kPast ? "past" : "future";
}

LagDirection parse_lag_direction(std::string_view s) {
  if (s == "past") return LagDirection::kPast;
  if (s == "future") return LagDirection::kFuture;
  throw InvalidInput("lag direction must be 'past' or 'future', got '" + std::string(s) + "'");
}

double WindowedCorrelations::center_time_s(Index w) const {
  const double start = static_cast<double>(first_sample + w * window_len_samples);
  return (start + 0.5 * static_cast<double>(window_len_samples)) / fs_hz;
}

LaggedDesign lag_embed(const MultichannelSeries& series, Index lag_count,
                       LagDirection direction) {
  if (lag_count < 1) throw InvalidInput("lag count must be at least 1");
  const Index total = series.samples();
  if (total < lag_count) {
    throw InvalidInput("series has " + std::to_string(total) + " samples, fewer than " +
                       std::to_string(lag_count) + " lags");
  }
  const Index channels = series.channels();
  const Index valid = total - lag_count + 1;
  const Matrix& x = series.data();

  LaggedDesign design;
  design.lag_count = lag_count;
  design.direction = direction;
  design.source_samples = total;
  design.fs_hz = series.fs_hz();
  design.t_offset = direction == LagDirection::kPast ? lag_count - 1 : 0;
  design.data.resize(valid, channels * lag_count);

  const Index sign = direction == LagDirection::kPast ? -1 : 1;
  for (Index k = 0; k < valid; ++k) {
    const Index t = k + design.t_offset;
    for (Index c = 0; c < channels; ++c) {
      for (Index l = 0; l < lag_count; ++l) {
        design.data(k, c * lag_count + l) = x(t + sign * l, c);
      }
    }
  }
  return design;
}

Vector aligned_channel(const MultichannelSeries& env, const LaggedDesign& design) {
  check_envelope(env, design, "envelope");
  return env.data().col(0).segment(design.t_offset, design.rows());
}

Vector difference_observation(const MultichannelSeries& env1, const MultichannelSeries& env2,
                              const LaggedDesign& design) {
  check_envelope(env1, design, "env1");
  check_envelope(env2, design, "env2");
  return env1.data().col(0).segment(design.t_offset, design.rows()) -
         env2.data().col(0).segment(design.t_offset, design.rows());
}

MultichannelSeries zscore(const MultichannelSeries& series) {
  Matrix out = series.data();
  const double n = static_cast<double>(out.rows());
  for (Index c = 0; c < out.cols(); ++c) {
    const double mean = out.col(c).mean();
    out.col(c).array() -= mean;
    const double sd = std::sqrt(out.col(c).squaredNorm() / n);
    if (sd > 0.0) out.col(c) /= sd;
  }
  return MultichannelSeries(std::move(out), series.fs_hz(), series.labels());
}

double pearson(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  const double n = static_cast<double>(a.size());
  const Vector da = a.array() - a.mean();
  const Vector db = b.array() - b.mean();
  const double va = da.squaredNorm() / n;
  const double vb = db.squaredNorm() / n;
  if (va < kVarianceGuard || vb < kVarianceGuard) return 0.0;
  const double r = da.dot(db) / (n * std::sqrt(va * vb));
  return std::clamp(r, -1.0, 1.0);
}

WindowedCorrelations window_correlations(const LaggedDesign& design, const Vector& decoder,
                                         const MultichannelSeries& env1,
                                         const MultichannelSeries& env2,
                                         Index window_len_samples) {
  if (decoder.size() != design.features()) {
    throw InvalidInput("decoder length " + std::to_string(decoder.size()) +
                       " does not match design width " + std::to_string(design.features()));
  }
  if (window_len_samples < 3) throw InvalidInput("window must span at least 3 samples");
  const Vector e1 = aligned_channel(env1, design);
  const Vector e2 = aligned_channel(env2, design);
  const Vector recon = design.data * decoder;

  WindowedCorrelations out;
  out.window_len_samples = window_len_samples;
  out.first_sample = design.t_offset;
  out.fs_hz = design.fs_hz;
  const Index windows = design.rows() / window_len_samples;
  out.r1.resize(windows);
  out.r2.resize(windows);
  for (Index w = 0; w < windows; ++w) {
    const Index start = w * window_len_samples;
    const auto yw = recon.segment(start, window_len_samples);
    out.r1(w) = pearson(yw, e1.segment(start, window_len_samples));
    out.r2(w) = pearson(yw, e2.segment(start, window_len_samples));
  }
  return out;
}

}  // namespace msmaad
