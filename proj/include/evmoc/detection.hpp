// evmoc - Motion compensation and moving-object tracking for event cameras
// SPDX-License-Identifier: MIT

#ifndef EVMOC_DETECTION_HPP
#define EVMOC_DETECTION_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "evmoc/compensation.hpp"
#include "evmoc/projection.hpp"
#include "evmoc/types.hpp"

namespace evmoc {

/// Per-bin misalignment score rho = T(i,j) - <T> over occupied bins, in
/// normalized slice-time units, so rho lies in [-1, 1]. Bins the global model
/// failed to compensate deviate from the mean; strongly positive bins hold
/// events whose timestamps run late, the signature of independent motion.
struct MotionScoreField {
  int width = 0;
  int height = 0;
  std::vector<double> rho;
  std::vector<std::uint8_t> defined; ///< 1 where the underlying bin is occupied

  double at(int i, int j) const {
    return rho[static_cast<std::size_t>(j) * width + i];
  }
};

struct DetectionConfig {
  double lambda = 0.15; ///< minimum rho for object pixels, in (0, 1)
  int min_area = 10;    ///< bins; smaller components are discarded
  /// Also threshold rho < -lambda. Off by default: objects are assumed to
  /// trail the background mean only on the positive side.
  bool detect_negative = false;
};

/// A connected pixel region classified as independently moving.
struct DetectedObject {
  std::vector<std::pair<int, int>> pixels; ///< (i, j) bin coordinates
  Box bbox;                                ///< bin rect, tight hull
  double cx = 0.0, cy = 0.0;               ///< centroid, bin coordinates
  std::vector<std::size_t> event_indices;  ///< indices into the source slice
  MotionModel model;
};

inline MotionScoreField score_field(const TimeImage& t) {
  if (t.occupied == 0) throw EmptyInputError("score_field: empty time image");

  MotionScoreField f;
  f.width = t.width;
  f.height = t.height;
  const std::size_t n = t.mean_ts.size();
  f.rho.assign(n, 0.0);
  f.defined.assign(n, 0);

  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (t.counts[i] > 0) sum += t.mean_ts[i];
  const double mean = sum / static_cast<double>(t.occupied);

  for (std::size_t i = 0; i < n; ++i) {
    if (t.counts[i] == 0) continue;
    f.defined[i] = 1;
    f.rho[i] = t.mean_ts[i] - mean;
  }
  return f;
}

namespace detail {

inline std::vector<std::uint8_t> erode3x3(const std::vector<std::uint8_t>& m,
                                          int w, int h) {
  std::vector<std::uint8_t> out(m.size(), 0);
  for (int j = 1; j + 1 < h; ++j)
    for (int i = 1; i + 1 < w; ++i) {
      const std::size_t idx = static_cast<std::size_t>(j) * w + i;
      bool all = true;
      for (int dj = -1; dj <= 1 && all; ++dj)
        for (int di = -1; di <= 1; ++di)
          if (!m[idx + static_cast<std::size_t>(dj) * w + di]) {
            all = false;
            break;
          }
      out[idx] = all ? 1 : 0;
    }
  return out;
}

inline std::vector<std::uint8_t> dilate3x3(const std::vector<std::uint8_t>& m,
                                           int w, int h) {
  std::vector<std::uint8_t> out(m.size(), 0);
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      if (!m[static_cast<std::size_t>(j) * w + i]) continue;
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const int ii = i + di, jj = j + dj;
          if (ii >= 0 && jj >= 0 && ii < w && jj < h)
            out[static_cast<std::size_t>(jj) * w + ii] = 1;
        }
    }
  return out;
}

inline std::vector<std::uint8_t> open3x3(const std::vector<std::uint8_t>& m,
                                         int w, int h) {
  return dilate3x3(erode3x3(m, w, h), w, h);
}

} // namespace detail

/// Thresholds the score field at lambda, applies one pass of 3x3 morphological
/// opening, labels 8-connected components and keeps those with at least
/// min_area bins. Event subsets are not filled here; see assign_object_events.
inline std::vector<DetectedObject> detect(const MotionScoreField& field,
                                          const DetectionConfig& cfg) {
  if (!(cfg.lambda > 0.0) || !(cfg.lambda < 1.0))
    throw InvalidArgumentError("detect: lambda must be in (0, 1)");

  const int w = field.width, h = field.height;
  std::vector<std::uint8_t> mask(field.rho.size(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!field.defined[i]) continue;
    if (field.rho[i] > cfg.lambda ||
        (cfg.detect_negative && field.rho[i] < -cfg.lambda))
      mask[i] = 1;
  }
  mask = detail::open3x3(mask, w, h);

  std::vector<DetectedObject> objects;
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::vector<std::size_t> stack;
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      const std::size_t start = static_cast<std::size_t>(j) * w + i;
      if (!mask[start] || seen[start]) continue;

      DetectedObject obj;
      int min_i = i, max_i = i, min_j = j, max_j = j;
      double sum_i = 0.0, sum_j = 0.0;
      stack.clear();
      stack.push_back(start);
      seen[start] = 1;
      while (!stack.empty()) {
        const std::size_t cur = stack.back();
        stack.pop_back();
        const int ci = static_cast<int>(cur % w);
        const int cj = static_cast<int>(cur / w);
        obj.pixels.emplace_back(ci, cj);
        sum_i += ci + 0.5;
        sum_j += cj + 0.5;
        min_i = std::min(min_i, ci);
        max_i = std::max(max_i, ci);
        min_j = std::min(min_j, cj);
        max_j = std::max(max_j, cj);
        for (int dj = -1; dj <= 1; ++dj)
          for (int di = -1; di <= 1; ++di) {
            const int ni = ci + di, nj = cj + dj;
            if (ni < 0 || nj < 0 || ni >= w || nj >= h) continue;
            const std::size_t nidx = static_cast<std::size_t>(nj) * w + ni;
            if (mask[nidx] && !seen[nidx]) {
              seen[nidx] = 1;
              stack.push_back(nidx);
            }
          }
      }
      if (static_cast<int>(obj.pixels.size()) < cfg.min_area) continue;
      obj.cx = sum_i / obj.pixels.size();
      obj.cy = sum_j / obj.pixels.size();
      obj.bbox = {static_cast<double>(min_i), static_cast<double>(min_j),
                  static_cast<double>(max_i - min_i + 1),
                  static_cast<double>(max_j - min_j + 1)};
      objects.push_back(std::move(obj));
    }
  }
  return objects;
}

inline std::vector<DetectedObject> detect(const MotionScoreField& field,
                                          double lambda, int min_area) {
  DetectionConfig cfg;
  cfg.lambda = lambda;
  cfg.min_area = min_area;
  return detect(field, cfg);
}

/// Fills event_indices for every object: an event belongs to an object when
/// its warp under the global model lands in one of the object's bins. All
/// events of a shared bin go to that bin's object.
inline void assign_object_events(const EventSlice& c, const MotionModel& global,
                                 double d, std::vector<DetectedObject>& objects) {
  if (objects.empty()) return;
  const int gw = detail::grid_bins(c.sensor_width, d);
  const int gh = detail::grid_bins(c.sensor_height, d);
  constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> label(static_cast<std::size_t>(gw) * gh, kNone);
  for (std::size_t k = 0; k < objects.size(); ++k) {
    objects[k].event_indices.clear();
    for (const auto& [i, j] : objects[k].pixels)
      label[static_cast<std::size_t>(j) * gw + i] = static_cast<std::uint32_t>(k);
  }

  const WarpCoeffs wc(global, c.center());
  const double inv_d = 1.0 / d;
  const double inv_dt = 1.0 / c.dt;
  for (std::size_t n = 0; n < c.events.size(); ++n) {
    const Event& e = c.events[n];
    const double t_hat = (e.t - c.t0) * inv_dt;
    const Vec2 dsp = wc.displacement(e.x, e.y);
    const int i = static_cast<int>(std::floor((e.x - t_hat * dsp.x) * inv_d));
    const int j = static_cast<int>(std::floor((e.y - t_hat * dsp.y) * inv_d));
    if (i < 0 || j < 0 || i >= gw || j >= gh) continue;
    const std::uint32_t k = label[static_cast<std::size_t>(j) * gw + i];
    if (k != kNone) objects[k].event_indices.push_back(n);
  }
}

/// Fits a 4-parameter model to the object's own events by running the full
/// compensation on the subset alone, warm-started from m0 (callers typically
/// pass the global model; the object's absolute motion is usually closer to
/// it than to the identity).
inline MotionModel fit_object_model(const EventSlice& c, const DetectedObject& obj,
                                    const OptimizerConfig& cfg,
                                    const MotionModel& m0 = MotionModel::identity()) {
  if (obj.event_indices.size() <
      static_cast<std::size_t>(cfg.min_object_events))
    throw InsufficientEventsError(
        "fit_object_model: " + std::to_string(obj.event_indices.size()) +
        " events, need " + std::to_string(cfg.min_object_events));

  EventSlice sub;
  sub.t0 = c.t0;
  sub.dt = c.dt;
  sub.sensor_width = c.sensor_width;
  sub.sensor_height = c.sensor_height;
  sub.events.reserve(obj.event_indices.size());
  for (std::size_t idx : obj.event_indices) sub.events.push_back(c.events[idx]);
  return compensate(sub, m0, cfg).model;
}

/// Removes every detected object's events and re-compensates the remaining
/// cloud, warm-started from the current background model.
inline CompensationResult refine_background(const EventSlice& c,
                                            const std::vector<DetectedObject>& objects,
                                            const MotionModel& m,
                                            const OptimizerConfig& cfg) {
  std::vector<std::uint8_t> is_object(c.events.size(), 0);
  for (const DetectedObject& obj : objects)
    for (std::size_t idx : obj.event_indices) is_object[idx] = 1;

  EventSlice rest;
  rest.t0 = c.t0;
  rest.dt = c.dt;
  rest.sensor_width = c.sensor_width;
  rest.sensor_height = c.sensor_height;
  rest.events.reserve(c.events.size());
  for (std::size_t n = 0; n < c.events.size(); ++n)
    if (!is_object[n]) rest.events.push_back(c.events[n]);

  if (rest.empty())
    throw EmptyInputError("refine_background: every event belongs to an object");
  return compensate(rest, m, cfg);
}

} // namespace evmoc

#endif // EVMOC_DETECTION_HPP
