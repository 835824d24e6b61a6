// evmoc - Motion compensation and moving-object tracking for event cameras
// SPDX-License-Identifier: MIT

#ifndef EVMOC_TYPES_HPP
#define EVMOC_TYPES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "evmoc/error.hpp"

namespace evmoc {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// A single asynchronous sensor reading. Coordinates are real-valued because
/// warped events leave the integer sensor grid; polarity is carried through
/// I/O but never enters any computation.
struct Event {
  double t = 0.0; ///< seconds, >= 0
  double x = 0.0; ///< image-plane x, pixels
  double y = 0.0; ///< image-plane y, pixels
  std::uint8_t polarity = 0;

  bool finite() const {
    return std::isfinite(t) && std::isfinite(x) && std::isfinite(y);
  }
};

inline bool operator==(const Event& a, const Event& b) {
  return a.t == b.t && a.x == b.x && a.y == b.y && a.polarity == b.polarity;
}

/// The 4-parameter global (or per-object) warp model: translation parallel to
/// the image plane, expansion toward it, and rotation about the optical axis.
/// Units are per-slice: a model describes the displacement accumulated across
/// one normalized time slice.
struct MotionModel {
  double h_x = 0.0;   ///< pixels per slice
  double h_y = 0.0;   ///< pixels per slice
  double h_z = 0.0;   ///< dimensionless expansion per slice
  double theta = 0.0; ///< radians per slice

  static MotionModel identity() { return {}; }

  bool finite() const {
    return std::isfinite(h_x) && std::isfinite(h_y) && std::isfinite(h_z) &&
           std::isfinite(theta);
  }

  double norm() const {
    return std::sqrt(h_x * h_x + h_y * h_y + h_z * h_z + theta * theta);
  }
};

inline bool operator==(const MotionModel& a, const MotionModel& b) {
  return a.h_x == b.h_x && a.h_y == b.h_y && a.h_z == b.h_z &&
         a.theta == b.theta;
}

inline MotionModel operator-(const MotionModel& a, const MotionModel& b) {
  return {a.h_x - b.h_x, a.h_y - b.h_y, a.h_z - b.h_z, a.theta - b.theta};
}

/// A bounded time window of events: the cloud C over [t0, t0 + dt].
struct EventSlice {
  std::vector<Event> events;
  double t0 = 0.0; ///< slice start, seconds
  double dt = 0.0; ///< slice duration, seconds, > 0
  int sensor_width = 0;
  int sensor_height = 0;

  std::size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }

  /// Default rotation/expansion center: the image center.
  Vec2 center() const {
    return {0.5 * static_cast<double>(sensor_width),
            0.5 * static_cast<double>(sensor_height)};
  }

  /// Normalized timestamp t_hat = (t - t0) / dt in [0, 1].
  double normalized_time(const Event& e) const { return (e.t - t0) / dt; }

  /// Checks the slice invariants; throws InvalidArgumentError on violation.
  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt) || !std::isfinite(t0))
      throw InvalidArgumentError("EventSlice: dt must be finite and > 0");
    if (sensor_width <= 0 || sensor_height <= 0)
      throw InvalidArgumentError("EventSlice: sensor dimensions must be positive");
    double prev = t0;
    for (const Event& e : events) {
      if (!e.finite() || e.t < 0.0)
        throw InvalidArgumentError("EventSlice: non-finite or negative event");
      if (e.t < t0 || e.t > t0 + dt)
        throw InvalidArgumentError("EventSlice: event outside [t0, t0 + dt]");
      if (e.t < prev)
        throw InvalidArgumentError("EventSlice: events not sorted by t");
      prev = e.t;
    }
  }
};

/// Axis-aligned rectangle; used both for bin rectangles (detection domain)
/// and sensor-pixel bounding boxes (ground truth, track records).
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double x1() const { return x + w; }
  double y1() const { return y + h; }

  bool valid() const { return w > 0.0 && h > 0.0; }
};

inline double intersection_area(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x1(), b.x1()) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y1(), b.y1()) - std::max(a.y, b.y));
  return ix * iy;
}

/// Scales a box between coordinate domains (e.g. bins -> sensor pixels).
inline Box scale_box(const Box& b, double s) {
  return {b.x * s, b.y * s, b.w * s, b.h * s};
}

} // namespace evmoc

#endif // EVMOC_TYPES_HPP
