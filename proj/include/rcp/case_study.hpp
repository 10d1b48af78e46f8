#pragma once

#include <functional>
#include <variant>

#include "rcp/executor.hpp"
#include "rcp/synthesis.hpp"

namespace rcp {

// Side-to-side maneuver envelope: shuttle between two resting windows while
// respecting position, velocity, and braking limits.
//   d_max    outermost position either side
//   d_thres  inner edge of each resting window
//   d_accel  distance budget for getting up to speed
//   v_max    speed cap
//   v_min    speed below which only the turnaround envelopes count as alive
struct ManeuverParams {
  double d_max = 2.5;
  double d_thres = 1.5;
  double d_accel = 0.3;
  double v_max = 2.0;
  double v_min = 0.6;

  // Braking slope that still stops within d_max when fully extended.
  double a_saf() const { return -v_max / (d_max - d_thres + d_accel); }
  // Acceleration needed to reach v_min within the d_accel budget.
  double a_liv() const { return -v_min / d_accel; }

  void validate() const;  // throws std::invalid_argument on bad orderings
};

// Outer safety hexagon: |x| <= d_max, |v| <= v_max, |x - v/a_saf| <= d_max.
std::vector<LinIneq> safe_region(const ManeuverParams& p);

// Closure of the states inside the hexagon where no liveness band holds.
std::vector<LinIneq> nonlive_hexagon(const ManeuverParams& p);

// Safe-and-alive set as convex pieces: the hexagon intersected with one side
// of one liveness band each (six pieces, generally overlapping).
std::vector<std::vector<LinIneq>> maneuver_region(const ManeuverParams& p);

SpecSet maneuver_specs(const ManeuverParams& p);

// Everything the synthesizer needs for the left-to-right mode; the opposite
// mode is its point reflection.
struct CaseStudy {
  ManeuverParams params;
  AffineDynamics dyn;
  Vec u_lo, u_hi;
  double margin = 1e-6;
  Triangulation tri;
  RoleTable roles;
  ContinuitySpec cont;
  TargetSet target;
  SpecSet specs;
};

CaseStudy build_case_study(const ManeuverParams& p, double bound = 3.2,
                           double margin = 1e-6);

// Synthesizes the left-to-right mode and reflects it into the returning one.
std::variant<HybridController, ModeSynthesisFailure> synthesize_maneuver(
    const CaseStudy& cs);

// Reference profile for the tracking comparison: constant-speed cruises
// joined by half-cosine turnarounds that peak at x_peak.
struct BaselineProfile {
  double v_cruise = 1.0;
  double x_peak = 1.9;
  double t_blend = 0.8;
  double kp = 6.0;
  double kd = 4.0;
  double clamp = 6.0;

  double cruise_half() const;  // x reached when the blend takes over
  double period() const;

  struct RefPoint {
    double x, v, a;
  };
  RefPoint at(double t) const;
};

// Saturating tracker of the profile, shaped for run_baseline.
std::function<Vec(double, const Vec&)> tracking_controller(const BaselineProfile& bp);

}  // namespace rcp
