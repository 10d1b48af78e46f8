#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rcp/geometry.hpp"
#include "rcp/synthesis.hpp"

namespace rcp {

constexpr double kGravity = 9.81;

// |c . s| compared against a bound: safety bands cap it, liveness bands
// demand it. A state is safe when every safety band holds and live when at
// least one liveness band does.
struct BandSpec {
  Vec c;
  double bound = 0.0;
};

struct SpecSet {
  std::vector<BandSpec> safety;
  std::vector<BandSpec> liveness;
};

struct SpecFlags {
  std::vector<bool> safety, liveness;
  bool safe() const;
  bool live() const;
};

SpecFlags check_specs(const SpecSet& specs, const Vec& s);

// Lateral acceleration realized by tilting against gravity.
double pitch_command(double u, double g = kGravity);

// One fixed step of the classic fourth-order Runge-Kutta scheme with the
// control held constant. Exact for the double-integrator plant.
Vec rk4_step(const AffineDynamics& dyn, const Vec& s, const Vec& u, double dt);

// Same scheme with the feedback re-evaluated at every internal stage, so the
// integrated system is the continuous closed loop rather than its sampled
// approximation. `control` must tolerate states slightly outside the simplex
// the step started in. The time-indexed variant passes the stage time along.
Vec rk4_step(const AffineDynamics& dyn, const std::function<Vec(const Vec&)>& control,
             const Vec& s, double dt);
Vec rk4_step(const AffineDynamics& dyn,
             const std::function<Vec(double, const Vec&)>& control, double t, const Vec& s,
             double dt);

struct DisturbanceEvent {
  enum class Kind { impulse, teleport, hold };
  Kind kind = Kind::impulse;
  double t = 0.0;
  Vec delta;              // impulse: state increment; teleport: new state
  double duration = 0.0;  // hold: freeze span in seconds
};

struct Scenario {
  Vec x0;
  std::string mode0;
  double duration = 0.0;
  double dt = 0.01;
  std::vector<DisturbanceEvent> events;
};

struct LogRow {
  double t = 0.0;
  Vec s, u;
  double theta_d = 0.0;
  int simplex = -1;  // -1 while outside the triangulated region
  std::string mode;
  SpecFlags flags;
};

struct EventRow {
  double t = 0.0;
  std::string kind, detail;
};

struct Crossing {
  double t = 0.0, x = 0.0;
  std::string from, to;
};

enum class RunStatus { completed, lost };

struct RunResult {
  std::vector<LogRow> rows;
  std::vector<EventRow> events;
  std::vector<Crossing> crossings;
  RunStatus status = RunStatus::completed;
};

// Closed-loop simulation: samples at t_k = k*dt, zero-order-hold control,
// target crossings detected by sign change of the velocity row with the
// interpolated position inside the window, mode switched to the successor at
// the interpolated instant. Disturbances fire at the first sample at or past
// their scheduled time; a hold freezes the state while logging continues.
// Outside the triangulation a saturating recovery law (planar single-input
// plants only) steers toward the nearest simplex; past the region's bounding
// box inflated by 2.0 the run is declared lost.
RunResult run_scenario(const HybridController& hc, const Scenario& sc,
                       const SpecSet& specs);

// Time-indexed control law under the same sampling and logging contract; the
// mode column reads "baseline" and target windows only label crossings.
RunResult run_baseline(const AffineDynamics& dyn,
                       const std::function<Vec(double, const Vec&)>& control,
                       const Scenario& sc, const SpecSet& specs,
                       const std::vector<TargetSet>& targets,
                       const Triangulation* tri = nullptr);

}  // namespace rcp
