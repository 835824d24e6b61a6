// evmoc - Motion compensation and moving-object tracking for event cameras
// SPDX-License-Identifier: MIT

#ifndef EVMOC_TRACKING_HPP
#define EVMOC_TRACKING_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <iostream>
#include <optional>
#include <vector>

#include "evmoc/types.hpp"

namespace evmoc {

/// State layout: X = [cx, cy, h_x, h_y, h_z, theta, u, v].
/// Positions and velocities are in bins (velocities per second); the four
/// model parameters keep their native units and evolve with identity
/// dynamics. Acceleration enters as white process noise on the velocity.
struct TrackState {
  int id = 0;
  int age = 0;    ///< measurement updates survived
  int missed = 0; ///< consecutive steps without a matched detection
  Eigen::Matrix<double, 8, 1> x = Eigen::Matrix<double, 8, 1>::Zero();
  Eigen::Matrix<double, 8, 8> P = Eigen::Matrix<double, 8, 8>::Zero();
  Box bbox; ///< latest matched detection's bounding box, bins

  double cx() const { return x(0); }
  double cy() const { return x(1); }
  MotionModel model() const { return {x(2), x(3), x(4), x(5)}; }
};

struct TrackerConfig {
  double gate_radius = 20.0; ///< bins, centroid association gate
  int max_missed = 5;

  // process noise (per step, diagonal)
  double q_pos = 1.0;
  double q_model = 1e-2;
  double q_vel = 0.5;
  // measurement noise
  double r_pos = 2.0;
  double r_model = 5e-2;
  // initial covariance for freshly spawned tracks
  double p0_pos = 4.0;
  double p0_model = 0.1;
  double p0_vel = 25.0;
};

/// One detection handed to the tracker: centroid and box in bins, plus the
/// fitted object model when per-object compensation had enough events.
struct TrackerDetection {
  double cx = 0.0;
  double cy = 0.0;
  Box bbox;
  std::optional<MotionModel> model;
};

/// Single-owner multi-object tracker. Predict-associate-update per step;
/// greedy nearest-centroid association under the gate radius, new tracks for
/// unmatched detections, retirement after max_missed consecutive misses.
/// Track ids are never reused within a run.
class Tracker {
public:
  explicit Tracker(TrackerConfig cfg = {}) : cfg_(cfg) {}

  const std::vector<TrackState>& tracks() const { return tracks_; }
  int numerical_failures() const { return numerical_failures_; }

  /// Advances every track by dt seconds and folds in this step's detections.
  void step(const std::vector<TrackerDetection>& detections, double dt) {
    if (!(dt > 0.0)) throw InvalidArgumentError("Tracker::step: dt must be > 0");
    predict(dt);

    // greedy nearest-first association under the gate
    struct Pair {
      double dist;
      std::size_t track, det;
    };
    std::vector<Pair> pairs;
    for (std::size_t ti = 0; ti < tracks_.size(); ++ti)
      for (std::size_t di = 0; di < detections.size(); ++di) {
        const double dx = tracks_[ti].x(0) - detections[di].cx;
        const double dy = tracks_[ti].x(1) - detections[di].cy;
        const double dist = std::sqrt(dx * dx + dy * dy);
        if (dist <= cfg_.gate_radius) pairs.push_back({dist, ti, di});
      }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      if (a.dist != b.dist) return a.dist < b.dist;
      if (a.track != b.track) return a.track < b.track;
      return a.det < b.det;
    });

    std::vector<std::uint8_t> track_used(tracks_.size(), 0);
    std::vector<std::uint8_t> det_used(detections.size(), 0);
    std::vector<std::size_t> failed;
    for (const Pair& p : pairs) {
      if (track_used[p.track] || det_used[p.det]) continue;
      track_used[p.track] = 1;
      det_used[p.det] = 1;
      if (!update(tracks_[p.track], detections[p.det])) failed.push_back(p.track);
    }

    for (std::size_t ti = 0; ti < tracks_.size(); ++ti)
      if (!track_used[ti]) ++tracks_[ti].missed;

    for (std::size_t di = 0; di < detections.size(); ++di)
      if (!det_used[di]) spawn(detections[di]);

    // retire failed and stale tracks
    std::vector<TrackState> live;
    live.reserve(tracks_.size());
    for (std::size_t ti = 0; ti < tracks_.size(); ++ti) {
      const bool fail =
          std::find(failed.begin(), failed.end(), ti) != failed.end();
      if (!fail && tracks_[ti].missed <= cfg_.max_missed)
        live.push_back(std::move(tracks_[ti]));
    }
    tracks_ = std::move(live);
  }

private:
  void predict(double dt) {
    Eigen::Matrix<double, 8, 8> F = Eigen::Matrix<double, 8, 8>::Identity();
    F(0, 6) = dt;
    F(1, 7) = dt;
    Eigen::Matrix<double, 8, 8> Q = Eigen::Matrix<double, 8, 8>::Zero();
    Q(0, 0) = Q(1, 1) = cfg_.q_pos;
    Q(2, 2) = Q(3, 3) = Q(4, 4) = Q(5, 5) = cfg_.q_model;
    Q(6, 6) = Q(7, 7) = cfg_.q_vel;
    for (TrackState& t : tracks_) {
      t.x = F * t.x;
      t.P = F * t.P * F.transpose() + Q;
    }
  }

  /// Measurement update; 6-dimensional when the detection carries a model,
  /// position-only otherwise. Returns false on covariance breakdown.
  bool update(TrackState& t, const TrackerDetection& det) {
    const bool with_model = det.model.has_value();
    const int zdim = with_model ? 6 : 2;

    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(zdim, 8);
    Eigen::VectorXd z(zdim);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(zdim, zdim);
    H(0, 0) = 1.0;
    H(1, 1) = 1.0;
    z(0) = det.cx;
    z(1) = det.cy;
    R(0, 0) = R(1, 1) = cfg_.r_pos;
    if (with_model) {
      for (int k = 0; k < 4; ++k) {
        H(2 + k, 2 + k) = 1.0;
        R(2 + k, 2 + k) = cfg_.r_model;
      }
      z(2) = det.model->h_x;
      z(3) = det.model->h_y;
      z(4) = det.model->h_z;
      z(5) = det.model->theta;
    }

    const Eigen::MatrixXd S = H * t.P * H.transpose() + R;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
    if (!lu.isInvertible()) {
      std::cerr << "evmoc: tracker update failed for track " << t.id
                << " (singular innovation covariance)\n";
      ++numerical_failures_;
      return false;
    }
    const Eigen::MatrixXd K = t.P * H.transpose() * lu.inverse();
    t.x += K * (z - H * t.x);
    // Joseph form keeps the covariance symmetric under roundoff
    const Eigen::Matrix<double, 8, 8> IKH =
        Eigen::Matrix<double, 8, 8>::Identity() - K * H;
    t.P = IKH * t.P * IKH.transpose() + K * R * K.transpose();
    t.P = 0.5 * (t.P + t.P.transpose()).eval();

    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>> es(t.P);
    if (es.eigenvalues().minCoeff() < -1e-9) {
      std::cerr << "evmoc: covariance for track " << t.id
                << " lost positive semi-definiteness\n";
      ++numerical_failures_;
      return false;
    }

    t.bbox = det.bbox;
    t.missed = 0;
    ++t.age;
    return true;
  }

  void spawn(const TrackerDetection& det) {
    TrackState t;
    t.id = next_id_++;
    t.x(0) = det.cx;
    t.x(1) = det.cy;
    if (det.model) {
      t.x(2) = det.model->h_x;
      t.x(3) = det.model->h_y;
      t.x(4) = det.model->h_z;
      t.x(5) = det.model->theta;
    }
    t.P.diagonal() << cfg_.p0_pos, cfg_.p0_pos, cfg_.p0_model, cfg_.p0_model,
        cfg_.p0_model, cfg_.p0_model, cfg_.p0_vel, cfg_.p0_vel;
    t.bbox = det.bbox;
    tracks_.push_back(std::move(t));
  }

  TrackerConfig cfg_;
  std::vector<TrackState> tracks_;
  int next_id_ = 1;
  int numerical_failures_ = 0;
};

} // namespace evmoc

#endif // EVMOC_TRACKING_HPP
