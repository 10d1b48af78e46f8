#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "rcp/synthesis.hpp"

using namespace rcp;

namespace {

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

Vec u1(double x) {
  Vec v(1);
  v << x;
  return v;
}

// xdd = u as a planar affine system.
AffineDynamics double_integrator(double drift_x = 0.0) {
  AffineDynamics d;
  d.A = Mat::Zero(2, 2);
  d.A(0, 1) = 1.0;
  d.B = Mat::Zero(2, 1);
  d.B(1, 0) = 1.0;
  d.a = v2(drift_x, 0.0);
  return d;
}

Simplex unit_triangle() {
  Simplex s;
  s.id = 0;
  s.verts = {v2(0, 0), v2(1, 0), v2(0, 1)};
  return s;
}

constexpr double kMargin = 1e-6;

}  // namespace

TEST_CASE("invariance rows on the unit triangle") {
  Simplex s = unit_triangle();
  AffineDynamics dyn = double_integrator();
  // Facet 1 (x=0 edge) has no control authority and zero drift at its
  // vertices; facet 2 (y=0 edge) forces u >= margin at the two bottom
  // vertices. The top vertex stays free and the cheapest choice is 0.
  auto u = invariance_lp(s, dyn, {1, 2}, u1(-3.2), u1(3.2), kMargin);
  REQUIRE(u.has_value());
  CHECK(std::abs((*u)[0](0) - kMargin) < 1e-12);
  CHECK(std::abs((*u)[1](0) - kMargin) < 1e-12);
  CHECK(std::abs((*u)[2](0)) < 1e-12);
  for (int j : {1, 2}) {
    Vec h = facet_normal(s, j);
    for (int i = 0; i < 3; ++i) {
      if (i != j) CHECK(h.dot(dyn.flow(s.verts[i], (*u)[i])) <= 1e-12);
    }
  }
}

TEST_CASE("all facets restricted stays feasible at zero margin") {
  Simplex s = unit_triangle();
  AffineDynamics dyn = double_integrator();
  auto u = invariance_lp(s, dyn, {0, 1, 2}, u1(-3.2), u1(3.2), 0.0);
  REQUIRE(u.has_value());
  // The hypotenuse row at the top vertex demands u <= -1 there; the bottom
  // vertices are squeezed to exactly zero.
  CHECK(std::abs((*u)[0](0)) < 1e-12);
  CHECK(std::abs((*u)[1](0)) < 1e-12);
  CHECK((*u)[2](0) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("uncontrollable drift is infeasible") {
  Simplex s = unit_triangle();
  // Constant drift to the left pushes flow out of the x=0 facet and no
  // control direction can counter it.
  auto u = invariance_lp(s, double_integrator(-1.0), {1}, u1(-3.2), u1(3.2), kMargin);
  CHECK_FALSE(u.has_value());
}

TEST_CASE("zero control bounds cannot meet a margin row") {
  Simplex s = unit_triangle();
  auto u = invariance_lp(s, double_integrator(), {2}, u1(0.0), u1(0.0), kMargin);
  CHECK_FALSE(u.has_value());
}

TEST_CASE("gain recovery reproduces vertex controls") {
  Simplex s = unit_triangle();
  auto c = affine_feedback(s, {u1(0), u1(1), u1(2)});
  CHECK(c.K(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.K(0, 1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(c.g(0)) < 1e-12);

  auto cc = affine_feedback(s, {u1(7), u1(7), u1(7)});
  CHECK(cc.K.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(cc.g(0) == doctest::Approx(7.0).epsilon(1e-12));

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  int done = 0;
  while (done < 50) {
    Simplex r;
    r.id = done;
    r.verts = {v2(coord(rng), coord(rng)), v2(coord(rng), coord(rng)),
               v2(coord(rng), coord(rng))};
    if (r.degenerate()) continue;
    ++done;
    std::vector<Vec> u = {u1(coord(rng)), u1(coord(rng)), u1(coord(rng))};
    auto ctrl = affine_feedback(r, u);
    for (int i = 0; i < 3; ++i) {
      CHECK((ctrl.eval(r.verts[i]) - u[i]).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }

  Simplex bad;
  bad.id = 5;
  bad.verts = {v2(0, 0), v2(1, 1), v2(2, 2)};
  CHECK_THROWS_AS(affine_feedback(bad, {u1(0), u1(0), u1(0)}), std::invalid_argument);
}

TEST_CASE("equilibrium check, singular closed loop without zeros") {
  // Constant-thrust double integrator: field (y, 1) never vanishes.
  AffineDynamics dyn = double_integrator();
  SimplexController c;
  c.K = Mat::Zero(1, 2);
  c.g = u1(1.0);
  CHECK(equilibrium_check(dyn, c, unit_triangle()));
}

TEST_CASE("equilibrium check, singular closed loop with a zero line") {
  // Zero control leaves the drift field (y, 0), which vanishes on y = 0.
  AffineDynamics dyn = double_integrator();
  SimplexController c;
  c.K = Mat::Zero(1, 2);
  c.g = u1(0.0);
  Vec where;
  CHECK_FALSE(equilibrium_check(dyn, c, unit_triangle(), 1e-9, &where));
  CHECK(std::abs(where(1)) <= 1e-9);
}

TEST_CASE("equilibrium check, isolated equilibrium in and out") {
  AffineDynamics dyn;
  dyn.A = Mat::Zero(2, 2);
  dyn.B = Mat::Identity(2, 2);
  dyn.a = v2(0, 0);
  SimplexController c;
  c.K = -Mat::Identity(2, 2);  // closed loop sdot = -s, equilibrium at 0
  c.g = v2(0, 0);
  Vec where;
  CHECK_FALSE(equilibrium_check(dyn, c, unit_triangle(), 1e-9, &where));
  CHECK(where.norm() <= 1e-9);

  Simplex far;
  far.id = 1;
  far.verts = {v2(5, 5), v2(6, 5), v2(5, 6)};
  CHECK(equilibrium_check(dyn, c, far));
}

namespace {

// Unit square split along the main diagonal, with flow-through roles:
// the lower triangle holds its bottom edge, the upper one its top edge.
struct SquareMode {
  Triangulation tri;
  RoleTable roles;
  AffineDynamics dyn = double_integrator();
  Vec lo = u1(-3.2), hi = u1(3.2);
};

SquareMode square_mode() {
  SquareMode m;
  m.tri.vertices = {v2(0, 0), v2(1, 0), v2(1, 1), v2(0, 1)};
  m.tri.simplices = {{0, 1, 2}, {0, 2, 3}};
  m.tri.build_adjacency();
  m.roles = {
      {FacetRole::exit, FacetRole::exit, FacetRole::restricted},  // bottom edge held
      {FacetRole::restricted, FacetRole::exit, FacetRole::exit},  // top edge held
  };
  return m;
}

}  // namespace

TEST_CASE("mode synthesis on the square: shared vertices agree") {
  SquareMode m = square_mode();
  auto out = synthesize_mode(m.tri, m.dyn, m.roles, m.lo, m.hi, {});
  REQUIRE(std::holds_alternative<ModeController>(out));
  const auto& mc = std::get<ModeController>(out);
  REQUIRE(mc.by_simplex.size() == 2);

  // Bottom-edge rows force u >= margin at vertices 0,1; top-edge rows force
  // u <= -margin at vertices 2,3; minimum effort lands exactly on them.
  const auto& c0 = mc.by_simplex.at(0);
  const auto& c1 = mc.by_simplex.at(1);
  CHECK(std::abs(c0.vertex_controls[0](0) - kMargin) < 1e-12);
  CHECK(std::abs(c0.vertex_controls[1](0) - kMargin) < 1e-12);
  CHECK(std::abs(c0.vertex_controls[2](0) + kMargin) < 1e-12);
  CHECK(std::abs(c1.vertex_controls[2](0) + kMargin) < 1e-12);

  // Continuity across the diagonal at both shared vertices.
  for (const Vec& sv : {v2(0, 0), v2(1, 1)}) {
    CHECK((c0.eval(sv) - c1.eval(sv)).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("opposing demands at shared vertices are reported, discontinuity resolves them") {
  // Two triangles glued along y = 0, both restricting the shared edge from
  // their own side: u >= margin from above fights u <= -margin from below.
  Triangulation tri;
  tri.vertices = {v2(0, 0), v2(1, 0), v2(0, 1), v2(0, -1)};
  tri.simplices = {{0, 1, 2}, {0, 1, 3}};
  tri.build_adjacency();
  RoleTable roles = {
      {FacetRole::exit, FacetRole::exit, FacetRole::restricted},
      {FacetRole::exit, FacetRole::exit, FacetRole::restricted},
  };
  AffineDynamics dyn = double_integrator();

  auto out = synthesize_mode(tri, dyn, roles, u1(-3.2), u1(3.2), {});
  REQUIRE(std::holds_alternative<ModeSynthesisFailure>(out));
  const auto& f = std::get<ModeSynthesisFailure>(out);
  CHECK((f.vertex == 0 || f.vertex == 1));
  CHECK(f.detail.size() >= 2);  // both sides' rows are listed

  ContinuitySpec cont;
  cont.discontinuity_vertices = {0, 1};
  auto out2 = synthesize_mode(tri, dyn, roles, u1(-3.2), u1(3.2), cont);
  REQUIRE(std::holds_alternative<ModeController>(out2));
  const auto& mc = std::get<ModeController>(out2);
  CHECK(mc.by_simplex.at(0).vertex_controls[0](0) > 0.0);
  CHECK(mc.by_simplex.at(1).vertex_controls[0](0) < 0.0);
}

TEST_CASE("pins steer the selected controls") {
  SquareMode m = square_mode();
  ContinuitySpec cont;
  cont.pins.push_back({0, -1, u1(0.5), u1(1.0)});
  auto out = synthesize_mode(m.tri, m.dyn, m.roles, m.lo, m.hi, cont);
  REQUIRE(std::holds_alternative<ModeController>(out));
  CHECK(std::get<ModeController>(out).by_simplex.at(0).vertex_controls[0](0) ==
        doctest::Approx(0.5).epsilon(1e-9));

  // A pin that contradicts the invariance rows is diagnosed per simplex.
  ContinuitySpec bad;
  bad.pins.push_back({0, -1, u1(-1.0), u1(-0.5)});
  auto out2 = synthesize_mode(m.tri, m.dyn, m.roles, m.lo, m.hi, bad);
  REQUIRE(std::holds_alternative<ModeSynthesisFailure>(out2));
  CHECK(std::get<ModeSynthesisFailure>(out2).simplex == 0);
}

TEST_CASE("missing restricted facet is rejected up front") {
  SquareMode m = square_mode();
  m.roles[0] = {FacetRole::exit, FacetRole::exit, FacetRole::exit};
  CHECK_THROWS_AS(synthesize_mode(m.tri, m.dyn, m.roles, m.lo, m.hi, {}),
                  std::invalid_argument);
}

namespace {

struct MirrorPair {
  Triangulation tri;
  RoleTable roles;
  ContinuitySpec cont;
  AffineDynamics dyn = double_integrator();
  ModeDesign design;
};

// Two point-symmetric triangles; the origin needs per-side values, which
// exercises the discontinuity path during synthesis and reflection.
MirrorPair mirror_pair() {
  MirrorPair m;
  m.tri.vertices = {v2(0, 0), v2(1, 0), v2(0, 1), v2(-1, 0), v2(0, -1)};
  m.tri.simplices = {{0, 1, 2}, {0, 3, 4}};
  m.tri.build_adjacency();
  m.roles = {
      {FacetRole::exit, FacetRole::exit, FacetRole::restricted},
      {FacetRole::exit, FacetRole::exit, FacetRole::restricted},
  };
  m.cont.discontinuity_vertices = {0};
  auto out = synthesize_mode(m.tri, m.dyn, m.roles, u1(-3.2), u1(3.2), m.cont);
  m.design.ctrl = std::get<ModeController>(out);
  m.design.roles = m.roles;
  m.design.target = {0.5, 1.5, "other"};
  m.design.discontinuity_vertices = m.cont.discontinuity_vertices;
  return m;
}

}  // namespace

TEST_CASE("reflection mirrors gains, roles, and the target window") {
  MirrorPair m = mirror_pair();
  ModeDesign r = reflect_mode(m.tri, m.design, "back");

  // Simplex 0 mirrors onto simplex 1 and vice versa.
  const auto& orig0 = m.design.ctrl.by_simplex.at(0);
  const auto& refl1 = r.ctrl.by_simplex.at(1);
  CHECK((refl1.K - orig0.K).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((refl1.g + orig0.g).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(r.target.x_lo == doctest::Approx(-1.5));
  CHECK(r.target.x_hi == doctest::Approx(-0.5));
  CHECK(r.target.successor == "back");
  CHECK(r.roles[1][2] == FacetRole::restricted);

  // u'(-s) = -u(s) pointwise, and f'(-s) = -f(s) for the driftless plant.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    double a = unit(rng), b = unit(rng) * (1.0 - a);
    Vec s = a * m.tri.vertices[1] + b * m.tri.vertices[2] +
            (1.0 - a - b) * m.tri.vertices[0];
    Vec u = orig0.eval(s);
    Vec ur = refl1.eval(-s);
    CHECK((ur + u).cwiseAbs().maxCoeff() <= 1e-9);
    Vec f = m.dyn.flow(s, u);
    Vec fr = m.dyn.flow(-s, ur);
    CHECK((fr + f).cwiseAbs().maxCoeff() <= 1e-9);
  }

  // Reflecting twice restores the original design exactly.
  ModeDesign rr = reflect_mode(m.tri, r, m.design.target.successor);
  for (const auto& [sid, sc] : m.design.ctrl.by_simplex) {
    const auto& back = rr.ctrl.by_simplex.at(sid);
    CHECK((back.K - sc.K).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((back.g - sc.g).cwiseAbs().maxCoeff() <= 1e-12);
    for (size_t i = 0; i < sc.vertex_controls.size(); ++i) {
      CHECK((back.vertex_controls[i] - sc.vertex_controls[i]).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("reflection rejects asymmetric triangulations") {
  SquareMode m = square_mode();
  ModeDesign d;
  d.roles = m.roles;
  CHECK_THROWS_AS(reflect_mode(m.tri, d, "other"), std::invalid_argument);
}

TEST_CASE("reachability over exit-facet paths") {
  SquareMode m = square_mode();
  TargetSet target{0.9, 1.1, "other"};

  // Lower triangle exits through its right edge, which crosses the window;
  // the upper one exits through the diagonal into the lower one.
  RoleTable ok = {
      {FacetRole::exit, FacetRole::restricted, FacetRole::restricted},
      {FacetRole::restricted, FacetRole::restricted, FacetRole::exit},
  };
  auto rep = reachability_check(m.tri, ok, target);
  CHECK(rep.ok);

  // Upper triangle escaping only through the left wall reaches nothing.
  RoleTable stuck = {
      {FacetRole::exit, FacetRole::restricted, FacetRole::restricted},
      {FacetRole::restricted, FacetRole::exit, FacetRole::restricted},
  };
  auto rep2 = reachability_check(m.tri, stuck, target);
  CHECK_FALSE(rep2.ok);
  REQUIRE(rep2.unreachable.size() == 1);
  CHECK(rep2.unreachable[0] == 1);
}

TEST_CASE("verification catches a corrupted controller") {
  SquareMode m = square_mode();
  auto out = synthesize_mode(m.tri, m.dyn, m.roles, m.lo, m.hi, {});
  ModeDesign d;
  d.ctrl = std::get<ModeController>(out);
  d.roles = m.roles;

  auto good = verify_mode(m.tri, m.dyn, d, m.lo, m.hi);
  CHECK(good.ok);
  for (const auto& [sid, issues] : good.simplex_issues) CHECK(issues.empty());

  d.ctrl.by_simplex.at(0).g(0) += 10.0;
  auto bad = verify_mode(m.tri, m.dyn, d, m.lo, m.hi);
  CHECK_FALSE(bad.ok);
  CHECK_FALSE(bad.simplex_issues.at(0).empty());
}
