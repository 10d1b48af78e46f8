#include "rcp/case_study.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rcp {

namespace {

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

Vec u1(double x) { return Vec::Constant(1, x); }

VertexPin pin(int vertex, int group, double lo, double hi) {
  VertexPin p;
  p.vertex = vertex;
  p.group = group;
  p.lo = u1(lo);
  p.hi = u1(hi);
  return p;
}

}  // namespace

void ManeuverParams::validate() const {
  if (!(d_accel > 0.0 && d_thres > 0.0 && d_max > 0.0 && v_min > 0.0 && v_max > 0.0)) {
    throw std::invalid_argument("maneuver parameters must be positive");
  }
  if (!(d_accel < d_thres)) {
    throw std::invalid_argument("d_accel must be smaller than d_thres");
  }
  if (!(d_thres < d_max)) {
    throw std::invalid_argument("d_thres must be smaller than d_max");
  }
  if (!(v_min < v_max)) {
    throw std::invalid_argument("v_min must be smaller than v_max");
  }
}

std::vector<LinIneq> safe_region(const ManeuverParams& p) {
  const double bs = -1.0 / p.a_saf();  // braking band slope
  return {
      {v2(1, 0), p.d_max},   {v2(-1, 0), p.d_max},
      {v2(0, 1), p.v_max},   {v2(0, -1), p.v_max},
      {v2(1, bs), p.d_max},  {v2(-1, -bs), p.d_max},
  };
}

std::vector<LinIneq> nonlive_hexagon(const ManeuverParams& p) {
  const double bl = -1.0 / p.a_liv();  // turnaround band slope
  return {
      {v2(0, 1), p.v_min},    {v2(0, -1), p.v_min},
      {v2(1, bl), p.d_thres}, {v2(-1, -bl), p.d_thres},
      {v2(1, -bl), p.d_thres}, {v2(-1, bl), p.d_thres},
  };
}

std::vector<std::vector<LinIneq>> maneuver_region(const ManeuverParams& p) {
  const double bl = -1.0 / p.a_liv();
  const std::vector<LinIneq> safe = safe_region(p);
  // One piece per side of each liveness band.
  const std::vector<LinIneq> alive = {
      {v2(0, -1), -p.v_min},    {v2(0, 1), -p.v_min},
      {v2(-1, -bl), -p.d_thres}, {v2(1, bl), -p.d_thres},
      {v2(-1, bl), -p.d_thres},  {v2(1, -bl), -p.d_thres},
  };
  std::vector<std::vector<LinIneq>> pieces;
  for (const LinIneq& half : alive) {
    std::vector<LinIneq> piece = safe;
    piece.push_back(half);
    pieces.push_back(std::move(piece));
  }
  return pieces;
}

SpecSet maneuver_specs(const ManeuverParams& p) {
  const double bs = -1.0 / p.a_saf();
  const double bl = -1.0 / p.a_liv();
  SpecSet specs;
  specs.safety = {
      {v2(1, 0), p.d_max},    // S1 position
      {v2(0, 1), p.v_max},    // S2 speed
      {v2(1, bs), p.d_max},   // S3 braking reserve
  };
  specs.liveness = {
      {v2(0, 1), p.v_min},     // L1 moving
      {v2(1, bl), p.d_thres},  // L2 turnaround envelope, right-bound
      {v2(1, -bl), p.d_thres}, // L3 turnaround envelope, left-bound
  };
  return specs;
}

CaseStudy build_case_study(const ManeuverParams& p, double bound, double margin) {
  p.validate();
  if (!(bound > 0.0)) throw std::invalid_argument("control bound must be positive");
  if (margin < 0.0) throw std::invalid_argument("margin must be nonnegative");

  CaseStudy cs;
  cs.params = p;
  cs.margin = margin;
  cs.dyn.A = Mat::Zero(2, 2);
  cs.dyn.A(0, 1) = 1.0;
  cs.dyn.B = Mat::Zero(2, 1);
  cs.dyn.B(1, 0) = 1.0;
  cs.dyn.a = Vec::Zero(2);
  cs.u_lo = u1(-bound);
  cs.u_hi = u1(bound);

  // Outer corners P, inner resting hexagon Q; the lower half mirrors the
  // upper one point-symmetrically. P2 and Q2 share their abscissa: both the
  // braking edge from P1 and the turnaround edge from Q1 land there.
  const double xe = p.d_thres - p.d_accel;
  auto& tri = cs.tri;
  tri.vertices = {
      v2(p.d_max, 0),  v2(xe, p.v_max),   v2(-p.d_max, p.v_max),   // P1 P2 P3
      v2(-p.d_max, 0), v2(-xe, -p.v_max), v2(p.d_max, -p.v_max),   // P4 P5 P6
      v2(p.d_thres, 0),  v2(xe, p.v_min),   v2(-xe, p.v_min),      // Q1 Q2 Q3
      v2(-p.d_thres, 0), v2(-xe, -p.v_min), v2(xe, -p.v_min),      // Q4 Q5 Q6
  };
  tri.names = {"P1", "P2", "P3", "P4", "P5", "P6",
               "Q1", "Q2", "Q3", "Q4", "Q5", "Q6"};
  tri.simplices = {
      {3, 9, 2},  {9, 8, 2},  {8, 7, 2},  {7, 1, 2},  {7, 6, 1},  {6, 0, 1},
      {10, 9, 4}, {9, 3, 4},  {11, 10, 5}, {10, 4, 5}, {0, 6, 5},  {6, 11, 5},
      {6, 7, 8},  {6, 8, 9},  {9, 10, 11}, {9, 11, 6},
  };
  tri.build_adjacency();
  for (int sid = 0; sid < tri.size(); ++sid) {
    if (tri.simplex(sid).degenerate()) {
      throw std::invalid_argument("triangle " + std::to_string(sid) +
                                  " degenerates for these parameters");
    }
  }

  // Left-to-right flow plan. The upper belt (0-5) hands each triangle to the
  // next until the braking wedge exits through the right resting window; the
  // lower belt (6-11) climbs back to that plan, crossing into the upper half
  // only through the left window; the inner hexagon (12-15) drains forward
  // over the resting chord. Every unlisted facet is held outflow-free, which
  // includes the whole region boundary.
  cs.roles.assign(16, std::vector<FacetRole>(3, FacetRole::restricted));
  const std::vector<std::vector<int>> exits = {
      {0},    {0},    {0},    {2},    {0},    {1, 2},
      {0, 2}, {1, 2}, {0, 2}, {1, 2}, {0},    {0, 2},
      {0, 2}, {0, 2}, {1},    {1},
  };
  for (int sid = 0; sid < 16; ++sid) {
    for (int f : exits[sid]) cs.roles[sid][f] = FacetRole::exit;
  }

  // Q1 takes opposite-sign controls on its two sides: the triangles ahead of
  // the window keep pushing forward while the window and return triangles
  // brake through it. Without the split the shared value would have to be
  // zero there, pinning an equilibrium onto the resting edge.
  cs.cont.discontinuity_vertices = {6};
  cs.cont.groups[6] = {{4, 12, 13, 15}, {5, 10, 11}};
  const double lift = -p.a_liv();
  cs.cont.pins = {
      pin(6, 0, 0.5 * p.v_min, bound),    // keep draining forward
      pin(6, 1, -bound, -0.5 * p.v_max),  // commit to the return kick
      pin(3, -1, lift, bound),            // liftoff floor across the
      pin(9, -1, lift, bound),            //   left resting window
  };

  cs.target = {p.d_thres, p.d_max, "R2L"};
  cs.specs = maneuver_specs(p);
  return cs;
}

std::variant<HybridController, ModeSynthesisFailure> synthesize_maneuver(const CaseStudy& cs) {
  auto res = synthesize_mode(cs.tri, cs.dyn, cs.roles, cs.u_lo, cs.u_hi, cs.cont, cs.margin);
  if (auto* fail = std::get_if<ModeSynthesisFailure>(&res)) return *fail;

  ModeDesign l2r;
  l2r.ctrl = std::get<ModeController>(std::move(res));
  l2r.roles = cs.roles;
  l2r.target = cs.target;
  l2r.discontinuity_vertices = cs.cont.discontinuity_vertices;
  ModeDesign r2l = reflect_mode(cs.tri, l2r, "L2R");

  HybridController hc;
  hc.tri = cs.tri;
  hc.dyn = cs.dyn;
  hc.u_lo = cs.u_lo;
  hc.u_hi = cs.u_hi;
  hc.margin = cs.margin;
  hc.modes[cs.target.successor] = std::move(r2l);
  hc.modes["L2R"] = std::move(l2r);
  return hc;
}

double BaselineProfile::cruise_half() const {
  return x_peak - v_cruise * t_blend / std::numbers::pi;
}

double BaselineProfile::period() const {
  return 2.0 * (2.0 * cruise_half() / v_cruise + t_blend);
}

BaselineProfile::RefPoint BaselineProfile::at(double t) const {
  const double xc = cruise_half();
  const double tc = 2.0 * xc / v_cruise;
  const double w = std::numbers::pi / t_blend;
  double tau = std::fmod(t, period());
  if (tau < 0.0) tau += period();
  if (tau < tc) return {-xc + v_cruise * tau, v_cruise, 0.0};
  tau -= tc;
  if (tau < t_blend) {
    return {xc + v_cruise / w * std::sin(w * tau), v_cruise * std::cos(w * tau),
            -v_cruise * w * std::sin(w * tau)};
  }
  tau -= t_blend;
  if (tau < tc) return {xc - v_cruise * tau, -v_cruise, 0.0};
  tau -= tc;
  return {-xc - v_cruise / w * std::sin(w * tau), -v_cruise * std::cos(w * tau),
          v_cruise * w * std::sin(w * tau)};
}

std::function<Vec(double, const Vec&)> tracking_controller(const BaselineProfile& bp) {
  return [bp](double t, const Vec& s) {
    BaselineProfile::RefPoint r = bp.at(t);
    double u = r.a + bp.kp * (r.x - s(0)) + bp.kd * (r.v - s(1));
    return u1(std::clamp(u, -bp.clamp, bp.clamp));
  };
}

}  // namespace rcp
