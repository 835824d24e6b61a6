// evmoc - Motion compensation and moving-object tracking for event cameras
// SPDX-License-Identifier: MIT

#ifndef EVMOC_WARP_HPP
#define EVMOC_WARP_HPP

#include <cmath>

#include "evmoc/types.hpp"

namespace evmoc {

/// Precomputed per-cloud warp coefficients. The backward warp to t0 is
///
///   [x'; y'] = [x; y] - t_hat * ( [h_x; h_y] + K * ([x; y] - c) )
///
/// with K = (h_z + 1) * R(theta) - I and t_hat = (t - t0) / dt in [0, 1].
/// Displacement is linear in t_hat by construction, so an event at t_hat = 1
/// moves exactly twice as far as one at t_hat = 0.5. Events at t = t0 are
/// fixed points of every model, and the identity model has K = 0 exactly.
struct WarpCoeffs {
  double kxx, kxy, kyx, kyy;
  double hx, hy;
  double cx, cy;

  WarpCoeffs(const MotionModel& m, Vec2 center)
      : hx(m.h_x), hy(m.h_y), cx(center.x), cy(center.y) {
    const double s = m.h_z + 1.0;
    const double c = std::cos(m.theta);
    const double sn = std::sin(m.theta);
    kxx = s * c - 1.0;
    kxy = -s * sn;
    kyx = s * sn;
    kyy = s * c - 1.0;
  }

  Vec2 displacement(double x, double y) const {
    const double rx = x - cx;
    const double ry = y - cy;
    return {hx + kxx * rx + kxy * ry, hy + kyx * rx + kyy * ry};
  }
};

/// Warps one event back to its t0 location under model m. The timestamp and
/// polarity are unchanged. Rotation and expansion are applied about `center`.
inline Event warp_event(const Event& e, const MotionModel& m, double t0,
                        double dt, Vec2 center) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw InvalidArgumentError("warp_event: dt must be finite and > 0");
  if (!e.finite() || !m.finite() || !std::isfinite(t0) ||
      !std::isfinite(center.x) || !std::isfinite(center.y))
    throw InvalidArgumentError("warp_event: non-finite input");

  const WarpCoeffs w(m, center);
  const double t_hat = (e.t - t0) / dt;
  const Vec2 d = w.displacement(e.x, e.y);
  return {e.t, e.x - t_hat * d.x, e.y - t_hat * d.y, e.polarity};
}

/// Element-wise warp of a slice; length and order are preserved.
inline EventSlice warp_event_cloud(const EventSlice& c, const MotionModel& m,
                                   Vec2 center) {
  if (!(c.dt > 0.0) || !std::isfinite(c.dt))
    throw InvalidArgumentError("warp_event_cloud: dt must be finite and > 0");
  if (!m.finite())
    throw InvalidArgumentError("warp_event_cloud: non-finite model");

  const WarpCoeffs w(m, center);
  EventSlice out = c;
  for (Event& e : out.events) {
    if (!e.finite())
      throw InvalidArgumentError("warp_event_cloud: non-finite event");
    const double t_hat = (e.t - c.t0) / c.dt;
    const Vec2 d = w.displacement(e.x, e.y);
    e.x -= t_hat * d.x;
    e.y -= t_hat * d.y;
  }
  return out;
}

inline EventSlice warp_event_cloud(const EventSlice& c, const MotionModel& m) {
  return warp_event_cloud(c, m, c.center());
}

/// Solves the warp for the event position at normalized time t_hat whose
/// backward warp under m lands exactly on p: the inverse of warp_event in the
/// spatial coordinates. Writing r = pos - center and q = p - center,
///
///   [(1 + t_hat) I - t_hat (h_z + 1) R(theta)] r = q + t_hat [h_x; h_y]
///
/// which is a 2x2 solve. Used by the synthetic generator to place events
/// along trajectories that collapse under the generating model.
inline Vec2 trajectory_position(Vec2 p, double t_hat, const MotionModel& m,
                                Vec2 center) {
  const double s = (m.h_z + 1.0) * t_hat;
  const double c = std::cos(m.theta);
  const double sn = std::sin(m.theta);
  const double a11 = (1.0 + t_hat) - s * c;
  const double a12 = s * sn;
  const double a21 = -s * sn;
  const double a22 = (1.0 + t_hat) - s * c;
  const double det = a11 * a22 - a12 * a21;
  if (std::abs(det) < 1e-12)
    throw NumericalFailureError("trajectory_position: singular warp");
  const double qx = (p.x - center.x) + t_hat * m.h_x;
  const double qy = (p.y - center.y) + t_hat * m.h_y;
  return {center.x + (a22 * qx - a12 * qy) / det,
          center.y + (-a21 * qx + a11 * qy) / det};
}

} // namespace evmoc

#endif // EVMOC_WARP_HPP
