// evmoc - Motion compensation and moving-object tracking for event cameras
// SPDX-License-Identifier: MIT

#ifndef EVMOC_COMPENSATION_HPP
#define EVMOC_COMPENSATION_HPP

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "evmoc/projection.hpp"
#include "evmoc/types.hpp"

namespace evmoc {

/// Tuning knobs for the two-stage optimizer. Translation quantities are in
/// bins (fractions of a sensor pixel, see bin_size); expansion and rotation
/// step sizes of 0 select the geometric default that makes their induced
/// pixel displacement at the RMS grid radius match the translation step.
struct OptimizerConfig {
  double step_x_bins = 2.0;
  double step_y_bins = 2.0;
  double step_z = 0.0;     ///< 0 = auto-scale from grid geometry
  double step_theta = 0.0; ///< 0 = auto-scale from grid geometry

  double tol_model = 1e-3;   ///< coarse loop guard, model-space L2
  double tol_density = 1e-4; ///< fine loop guard, density units
  int max_iterations = 100;

  double fine_step_bins = 1.0;  ///< initial perturbation, translation bins
  double fine_decay = 0.5;      ///< per-stalled-sweep step multiplier
  double fine_floor_bins = 0.05;

  double bin_size = kDefaultBinSize;
  int min_object_events = 50; ///< floor for per-object model fitting
  bool literal_gradient_labels = false;

  void validate() const {
    if (!(step_x_bins > 0.0) || !(step_y_bins > 0.0) || step_z < 0.0 ||
        step_theta < 0.0)
      throw InvalidArgumentError("OptimizerConfig: step sizes must be > 0");
    if (!(tol_model > 0.0) || !(tol_density > 0.0))
      throw InvalidArgumentError("OptimizerConfig: tolerances must be > 0");
    if (max_iterations < 1)
      throw InvalidArgumentError("OptimizerConfig: max_iterations must be >= 1");
    if (!(fine_decay > 0.0) || !(fine_decay < 1.0))
      throw InvalidArgumentError("OptimizerConfig: decay must be in (0,1)");
    if (!(fine_step_bins > 0.0) || !(fine_floor_bins > 0.0))
      throw InvalidArgumentError("OptimizerConfig: fine steps must be > 0");
    if (!(bin_size > 0.0))
      throw InvalidArgumentError("OptimizerConfig: bin_size must be > 0");
    if (min_object_events < 1)
      throw InvalidArgumentError("OptimizerConfig: min_object_events must be >= 1");
  }
};

struct CompensationResult {
  MotionModel model;
  EventCountImage count_image;
  TimeImage time_image;
  int iterations_coarse = 0;
  int iterations_fine = 0;
  double final_density = 0.0;
  bool converged = false;
  /// Density after the initial projection and after every accepted fine step;
  /// strictly increasing by construction of the acceptance rule.
  std::vector<double> accepted_densities;
};

/// Thrown when a model parameter leaves the finite domain or the model pushes
/// every event off the grid; carries the last finite model reached.
class OptimizerDivergedError : public Error {
public:
  OptimizerDivergedError(const std::string& what, MotionModel last)
      : Error(what), last_model_(last) {}
  const MotionModel& last_model() const { return last_model_; }

private:
  MotionModel last_model_;
};

namespace detail {

/// Per-parameter update scales in model units per unit gradient. The raw
/// expansion/rotation gradients grow with the radius at which structure sits,
/// so they are normalized by the mean squared bin radius of the grid,
/// (W^2 + H^2) / 12 for a W x H grid centered on the sensor.
struct StepScales {
  std::array<double, 4> s; // h_x, h_y (pixels), h_z, theta
  double r_rms_bins;

  StepScales(const OptimizerConfig& cfg, int grid_w, int grid_h) {
    const double r_ms2 =
        (static_cast<double>(grid_w) * grid_w + static_cast<double>(grid_h) * grid_h) / 12.0;
    r_rms_bins = std::sqrt(r_ms2);
    s[0] = cfg.step_x_bins * cfg.bin_size;
    s[1] = cfg.step_y_bins * cfg.bin_size;
    s[2] = cfg.step_z > 0.0 ? cfg.step_z : cfg.step_x_bins / r_ms2;
    s[3] = cfg.step_theta > 0.0 ? cfg.step_theta : cfg.step_x_bins / r_ms2;
  }
};

inline std::array<double, 4> as_array(const ModelGradient& g) {
  return {g.d_x, g.d_y, g.d_z, g.d_theta};
}

inline MotionModel add(const MotionModel& m, const std::array<double, 4>& d) {
  return {m.h_x + d[0], m.h_y + d[1], m.h_z + d[2], m.theta + d[3]};
}

} // namespace detail

/// Coarse gradient descent on the time image. Each iteration warps the cloud
/// with the current model, rebuilds the time image, reduces it to the four
/// parameter gradients and takes an additive step. A per-parameter factor is
/// halved whenever the gradient component changes sign (and relaxed back
/// toward 1 otherwise), which damps the limit cycling the fixed-step update
/// exhibits around the optimum. Stops when the model moved by no more than
/// tol_model (L2) in one iteration, or after max_iterations.
inline CompensationResult coarse_minimize(const EventSlice& c,
                                          const MotionModel& m0,
                                          const OptimizerConfig& cfg) {
  cfg.validate();
  if (c.empty()) throw EmptyInputError("coarse_minimize: empty slice");
  if (!m0.finite())
    throw InvalidArgumentError("coarse_minimize: non-finite initial model");

  const Vec2 center_px = c.center();
  const double d = cfg.bin_size;
  const Vec2 center_bins{center_px.x / d, center_px.y / d};
  const int gw = detail::grid_bins(c.sensor_width, d);
  const int gh = detail::grid_bins(c.sensor_height, d);
  const detail::StepScales scales(cfg, gw, gh);

  CompensationResult res;
  MotionModel m = m0;
  std::array<double, 4> prev_g{0.0, 0.0, 0.0, 0.0};
  std::array<double, 4> damp{1.0, 1.0, 1.0, 1.0};

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    const TimeImage t = project_time(c, m, d, center_px);
    if (t.occupied == 0)
      throw OptimizerDivergedError("coarse_minimize: all events left the grid", m);
    const ModelGradient mg =
        model_gradient(t, center_bins, cfg.literal_gradient_labels);
    if (!mg.finite())
      throw OptimizerDivergedError("coarse_minimize: non-finite gradient", m);

    const std::array<double, 4> g = detail::as_array(mg);
    std::array<double, 4> delta{};
    for (int k = 0; k < 4; ++k) {
      if (g[k] * prev_g[k] < 0.0)
        damp[k] *= 0.5;
      else if (g[k] * prev_g[k] > 0.0)
        damp[k] = std::min(1.0, damp[k] * 1.2);
      delta[k] = damp[k] * scales.s[k] * g[k];
    }
    const MotionModel next = detail::add(m, delta);
    if (!next.finite())
      throw OptimizerDivergedError("coarse_minimize: model diverged", m);

    res.iterations_coarse = iter;
    const double moved = std::sqrt(delta[0] * delta[0] + delta[1] * delta[1] +
                                   delta[2] * delta[2] + delta[3] * delta[3]);
    m = next;
    prev_g = g;
    if (moved <= cfg.tol_model) {
      res.converged = true;
      break;
    }
  }

  auto [img, ts] = project(c, m, d, center_px);
  if (img.occupied == 0)
    throw OptimizerDivergedError("coarse_minimize: all events left the grid", m);
  res.model = m;
  res.final_density = event_density(img);
  res.count_image = std::move(img);
  res.time_image = std::move(ts);
  return res;
}

/// Fine coordinate-wise density maximization on the event-count image.
/// Parameters are swept in fixed order (h_x, h_y, h_z, theta), +p tried
/// before -p, and the first strictly improving perturbation is accepted, so
/// runs are deterministic. A sweep with no acceptance decays the step; the
/// search stops when the step falls below the floor, when an accepted sweep
/// improves density by no more than tol_density, or when sweeps run out.
inline CompensationResult fine_refine(const EventSlice& c, const MotionModel& m0,
                                      const OptimizerConfig& cfg) {
  cfg.validate();
  if (c.empty()) throw EmptyInputError("fine_refine: empty slice");
  if (!m0.finite())
    throw InvalidArgumentError("fine_refine: non-finite initial model");

  const Vec2 center_px = c.center();
  const double d = cfg.bin_size;
  const int gw = detail::grid_bins(c.sensor_width, d);
  const int gh = detail::grid_bins(c.sensor_height, d);
  const detail::StepScales scales(cfg, gw, gh);
  // perturbation of p translation bins, displacement-equalized per parameter
  const std::array<double, 4> unit{d, d, 1.0 / scales.r_rms_bins,
                                   1.0 / scales.r_rms_bins};

  MotionModel m = m0;
  EventCountImage img = project_counts(c, m, d, center_px);
  if (img.occupied == 0)
    throw OptimizerDivergedError("fine_refine: all events left the grid", m);
  double density = event_density(img);

  CompensationResult res;
  res.accepted_densities.push_back(density);

  double p = cfg.fine_step_bins;
  for (int sweep = 1; sweep <= cfg.max_iterations; ++sweep) {
    res.iterations_fine = sweep;
    const double sweep_start = density;
    bool accepted = false;
    for (int k = 0; k < 4; ++k) {
      for (double sgn : {1.0, -1.0}) {
        std::array<double, 4> delta{};
        delta[k] = sgn * p * unit[k];
        const MotionModel trial = detail::add(m, delta);
        const EventCountImage timg = project_counts(c, trial, d, center_px);
        if (timg.occupied == 0) continue;
        const double trial_density = event_density(timg);
        if (trial_density > density) {
          m = trial;
          density = trial_density;
          res.accepted_densities.push_back(density);
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      p *= cfg.fine_decay;
      if (p < cfg.fine_floor_bins) {
        res.converged = true;
        break;
      }
    } else if (density - sweep_start <= cfg.tol_density) {
      res.converged = true;
      break;
    }
  }

  auto [fimg, fts] = project(c, m, d, center_px);
  res.model = m;
  res.final_density = event_density(fimg);
  res.count_image = std::move(fimg);
  res.time_image = std::move(fts);
  return res;
}

/// The full two-stage compensation: coarse minimization on the time image
/// followed by fine refinement on the event-count image.
inline CompensationResult compensate(const EventSlice& c, const MotionModel& m0,
                                     const OptimizerConfig& cfg) {
  CompensationResult coarse = coarse_minimize(c, m0, cfg);
  CompensationResult fine = fine_refine(c, coarse.model, cfg);
  fine.iterations_coarse = coarse.iterations_coarse;
  fine.converged = coarse.converged && fine.converged;
  return fine;
}

} // namespace evmoc

#endif // EVMOC_COMPENSATION_HPP
