// evmoc - Motion compensation and moving-object tracking for event cameras
// SPDX-License-Identifier: MIT

#ifndef EVMOC_PROJECTION_HPP
#define EVMOC_PROJECTION_HPP

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "evmoc/types.hpp"
#include "evmoc/warp.hpp"

namespace evmoc {

inline constexpr double kDefaultBinSize = 0.3; ///< fraction of a sensor pixel

/// Discretized projection of the warped cloud: per-bin event counts.
/// The grid is ceil(sensor/d) bins per axis; warped events falling outside
/// it are dropped and tallied in `clipped`, never clamped onto the border.
struct EventCountImage {
  int width = 0;
  int height = 0;
  double bin_size = kDefaultBinSize;
  std::vector<std::uint32_t> counts;
  std::uint64_t clipped = 0;
  std::uint64_t total = 0;    ///< sum of counts (in-grid events)
  std::uint64_t occupied = 0; ///< number of bins with at least one event

  std::uint32_t at(int i, int j) const {
    return counts[static_cast<std::size_t>(j) * width + i];
  }
};

/// Same grid as EventCountImage, holding the average normalized timestamp of
/// the events mapped to each bin. mean_ts is defined only where count > 0.
struct TimeImage {
  int width = 0;
  int height = 0;
  double bin_size = kDefaultBinSize;
  std::vector<double> mean_ts;
  std::vector<std::uint32_t> counts;
  std::uint64_t occupied = 0;

  double at(int i, int j) const {
    return mean_ts[static_cast<std::size_t>(j) * width + i];
  }
  std::uint32_t count_at(int i, int j) const {
    return counts[static_cast<std::size_t>(j) * width + i];
  }
  Vec2 center_bins() const {
    // grid coordinates of the sensor center
    return {0.5 * width, 0.5 * height};
  }
};

/// Per-bin Sobel responses over the time image. A bin's gradient is defined
/// only when all 9 bins of its 3x3 stencil are occupied; elsewhere it is
/// zero, so holes never fabricate gradients at silhouette borders.
struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<double> gx;
  std::vector<double> gy;
};

/// The four model-parameter gradients derived from the time image.
struct ModelGradient {
  double d_x = 0.0;
  double d_y = 0.0;
  double d_z = 0.0;     ///< expansion (divergence of the gradient field)
  double d_theta = 0.0; ///< rotation (curl of the gradient field)

  bool finite() const {
    return std::isfinite(d_x) && std::isfinite(d_y) && std::isfinite(d_z) &&
           std::isfinite(d_theta);
  }
};

namespace detail {

inline int grid_bins(int sensor_extent, double d) {
  return static_cast<int>(std::ceil(static_cast<double>(sensor_extent) / d));
}

struct BinAccumulator {
  int width, height;
  double inv_d;
  std::vector<std::uint32_t>* counts;
  std::vector<double>* ts_sum; // nullptr when timestamps are not needed

  bool deposit(double x, double y, double t_hat) {
    const int i = static_cast<int>(std::floor(x * inv_d));
    const int j = static_cast<int>(std::floor(y * inv_d));
    if (i < 0 || j < 0 || i >= width || j >= height) return false;
    const std::size_t idx = static_cast<std::size_t>(j) * width + i;
    ++(*counts)[idx];
    if (ts_sum) (*ts_sum)[idx] += t_hat;
    return true;
  }
};

} // namespace detail

/// Warps the slice by m and bins the result into an event-count image.
/// Faster path for density-only evaluations (no timestamp accumulation).
inline EventCountImage project_counts(const EventSlice& c, const MotionModel& m,
                                      double d, Vec2 center) {
  if (!(d > 0.0)) throw InvalidArgumentError("project: bin size must be > 0");
  if (c.empty()) throw EmptyInputError("project: empty slice");
  if (!m.finite()) throw InvalidArgumentError("project: non-finite model");

  EventCountImage img;
  img.width = detail::grid_bins(c.sensor_width, d);
  img.height = detail::grid_bins(c.sensor_height, d);
  img.bin_size = d;
  img.counts.assign(static_cast<std::size_t>(img.width) * img.height, 0);

  const WarpCoeffs w(m, center);
  detail::BinAccumulator acc{img.width, img.height, 1.0 / d, &img.counts,
                             nullptr};
  const double inv_dt = 1.0 / c.dt;
  for (const Event& e : c.events) {
    const double t_hat = (e.t - c.t0) * inv_dt;
    const Vec2 dsp = w.displacement(e.x, e.y);
    if (!acc.deposit(e.x - t_hat * dsp.x, e.y - t_hat * dsp.y, t_hat))
      ++img.clipped;
  }
  for (std::uint32_t v : img.counts) {
    img.total += v;
    if (v > 0) ++img.occupied;
  }
  return img;
}

/// Projects the warped slice into both discretized maps in one pass.
/// Timestamps entering the time image are normalized to [0, 1].
inline std::pair<EventCountImage, TimeImage> project(const EventSlice& c,
                                                     const MotionModel& m,
                                                     double d, Vec2 center) {
  if (!(d > 0.0)) throw InvalidArgumentError("project: bin size must be > 0");
  if (c.empty()) throw EmptyInputError("project: empty slice");
  if (!m.finite()) throw InvalidArgumentError("project: non-finite model");

  EventCountImage img;
  img.width = detail::grid_bins(c.sensor_width, d);
  img.height = detail::grid_bins(c.sensor_height, d);
  img.bin_size = d;
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  img.counts.assign(n, 0);
  std::vector<double> ts_sum(n, 0.0);

  const WarpCoeffs w(m, center);
  detail::BinAccumulator acc{img.width, img.height, 1.0 / d, &img.counts,
                             &ts_sum};
  const double inv_dt = 1.0 / c.dt;
  for (const Event& e : c.events) {
    const double t_hat = (e.t - c.t0) * inv_dt;
    const Vec2 dsp = w.displacement(e.x, e.y);
    if (!acc.deposit(e.x - t_hat * dsp.x, e.y - t_hat * dsp.y, t_hat))
      ++img.clipped;
  }

  TimeImage ts;
  ts.width = img.width;
  ts.height = img.height;
  ts.bin_size = d;
  ts.mean_ts.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t cnt = img.counts[i];
    img.total += cnt;
    if (cnt > 0) {
      ++img.occupied;
      ts.mean_ts[i] = ts_sum[i] / cnt;
    }
  }
  ts.counts = img.counts;
  ts.occupied = img.occupied;
  return {std::move(img), std::move(ts)};
}

inline std::pair<EventCountImage, TimeImage> project(const EventSlice& c,
                                                     const MotionModel& m,
                                                     double d) {
  return project(c, m, d, c.center());
}

/// Time image only; the count copy is skipped inside the coarse loop.
inline TimeImage project_time(const EventSlice& c, const MotionModel& m,
                              double d, Vec2 center) {
  auto [img, ts] = project(c, m, d, center);
  return std::move(ts);
}

/// Event density D: total in-grid events over the number of occupied bins.
/// The density is maximal when the motion is perfectly compensated.
inline double event_density(const EventCountImage& img) {
  if (img.occupied == 0)
    throw EmptyInputError("event_density: no occupied bins");
  return static_cast<double>(img.total) / static_cast<double>(img.occupied);
}

/// 3x3 Sobel over mean_ts, full-stencil-or-zero.
inline GradientField time_image_gradients(const TimeImage& t) {
  GradientField g;
  g.width = t.width;
  g.height = t.height;
  const std::size_t n = static_cast<std::size_t>(t.width) * t.height;
  g.gx.assign(n, 0.0);
  g.gy.assign(n, 0.0);

  const int w = t.width;
  for (int j = 1; j + 1 < t.height; ++j) {
    for (int i = 1; i + 1 < t.width; ++i) {
      const std::size_t idx = static_cast<std::size_t>(j) * w + i;
      bool full = true;
      for (int dj = -1; dj <= 1 && full; ++dj)
        for (int di = -1; di <= 1; ++di)
          if (t.counts[idx + static_cast<std::size_t>(dj) * w + di] == 0) {
            full = false;
            break;
          }
      if (!full) continue;

      const double tl = t.mean_ts[idx - w - 1], tc = t.mean_ts[idx - w],
                   tr = t.mean_ts[idx - w + 1];
      const double ml = t.mean_ts[idx - 1], mr = t.mean_ts[idx + 1];
      const double bl = t.mean_ts[idx + w - 1], bc = t.mean_ts[idx + w],
                   br = t.mean_ts[idx + w + 1];
      g.gx[idx] = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
      g.gy[idx] = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
    }
  }
  return g;
}

/// Reduces the Sobel field to the four model-parameter gradients:
///
///   d_x     = sum(Gx) / #I
///   d_y     = sum(Gy) / #I
///   d_z     = sum(G . r) / #I          (divergence pairs with expansion)
///   d_theta = sum(r x G) / #I          (curl pairs with rotation)
///
/// where r is the bin-center offset from `center` (grid coordinates) and #I
/// the number of occupied bins. The cross-product orientation (r x G rather
/// than G x r) is the sign calibration that makes the pure-rotation recovery
/// converge under the additive model update. `literal_labels` restores the
/// transposed assignment (cross -> d_z, dot -> d_theta) for comparison.
inline ModelGradient model_gradient(const TimeImage& t, Vec2 center,
                                    bool literal_labels = false) {
  ModelGradient out;
  if (t.occupied == 0) return out;

  const GradientField g = time_image_gradients(t);
  double sx = 0.0, sy = 0.0, sdot = 0.0, scross = 0.0;
  for (int j = 0; j < t.height; ++j) {
    for (int i = 0; i < t.width; ++i) {
      const std::size_t idx = static_cast<std::size_t>(j) * t.width + i;
      const double gx = g.gx[idx], gy = g.gy[idx];
      if (gx == 0.0 && gy == 0.0) continue;
      const double rx = (i + 0.5) - center.x;
      const double ry = (j + 0.5) - center.y;
      sx += gx;
      sy += gy;
      sdot += gx * rx + gy * ry;
      scross += rx * gy - ry * gx;
    }
  }
  const double inv = 1.0 / static_cast<double>(t.occupied);
  out.d_x = sx * inv;
  out.d_y = sy * inv;
  if (literal_labels) {
    // the transposed pairing as published: cross feeds expansion, dot rotation
    out.d_z = -scross * inv;
    out.d_theta = sdot * inv;
  } else {
    out.d_z = sdot * inv;
    out.d_theta = scross * inv;
  }
  return out;
}

inline ModelGradient model_gradient(const TimeImage& t,
                                    bool literal_labels = false) {
  return model_gradient(t, t.center_bins(), literal_labels);
}

} // namespace evmoc

#endif // EVMOC_PROJECTION_HPP
