// Lagged design matrices and window-level correlations.

#ifndef MSMAAD_EMBED_HPP
#define MSMAAD_EMBED_HPP

#include "msmaad/core.hpp"

#include <string_view>

namespace msmaad {

enum class LagDirection { kPast, kFuture };

std::string_view to_string(LagDirection d);
LagDirection parse_lag_direction(std::string_view s);

// Rows of stacked channel lags. Column c * lag_count + l holds channel c at
// lag l. Row k corresponds to sample k + t_offset of the source series.
struct LaggedDesign {
  Matrix data;
  Index lag_count = 1;
  Index t_offset = 0;
  LagDirection direction = LagDirection::kFuture;
  Index source_samples = 0;
  double fs_hz = 1.0;

  Index rows() const { return data.rows(); }
  Index features() const { return data.cols(); }
};

struct WindowedCorrelations {
  Vector r1;
  Vector r2;
  Index window_len_samples = 0;
  // Index into the source series of the first sample of window 0.
  Index first_sample = 0;
  double fs_hz = 1.0;

  Index windows() const { return r1.size(); }
  // Window centre in seconds.
  double center_time_s(Index w) const;
};

// Past: row for sample t holds x[t - l]; future: x[t + l]. Rows lacking a
// full lag set are dropped.
LaggedDesign lag_embed(const MultichannelSeries& series, Index lag_count,
                       LagDirection direction = LagDirection::kFuture);

// env1 - env2 aligned to the design rows.
Vector difference_observation(const MultichannelSeries& env1, const MultichannelSeries& env2,
                              const LaggedDesign& design);

// Single-channel envelope aligned to the design rows.
Vector aligned_channel(const MultichannelSeries& env, const LaggedDesign& design);

// Per-channel z-scoring. Constant channels are centred but not scaled.
MultichannelSeries zscore(const MultichannelSeries& series);

// Pearson correlation; returns 0 when either input has (population)
// variance below 1e-12.
double pearson(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

WindowedCorrelations window_correlations(const LaggedDesign& design, const Vector& decoder,
                                         const MultichannelSeries& env1,
                                         const MultichannelSeries& env2,
                                         Index window_len_samples);

}  // namespace msmaad

#endif  // MSMAAD_EMBED_HPP
