#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "rcp/executor.hpp"

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

AffineDynamics double_integrator() {
  AffineDynamics d;
  d.A = Mat::Zero(2, 2);
  d.A(0, 1) = 1.0;
  d.B = Mat::Zero(2, 1);
  d.B(1, 0) = 1.0;
  d.a = v2(0, 0);
  return d;
}

// Side-to-side maneuver bands: position, velocity, and braking envelopes must
// stay inside; motion is alive while the speed or either turnaround envelope
// is far enough out.
SpecSet maneuver_specs() {
  SpecSet s;
  s.safety = {{v2(1, 0), 2.5}, {v2(0, 1), 2.0}, {v2(1, 0.65), 2.5}};
  s.liveness = {{v2(0, 1), 0.6}, {v2(1, 0.5), 1.5}, {v2(1, -0.5), 1.5}};
  return s;
}

// One large triangle with two constant-thrust modes. "m" brakes rightward
// motion until it stops near the origin; its successor "m2" keeps pushing
// left, so the handoff does not stop again right away.
HybridController toy_controller() {
  HybridController hc;
  hc.tri.vertices = {v2(-3, -3), v2(3, -3), v2(0, 3)};
  hc.tri.simplices = {{0, 1, 2}};
  hc.tri.build_adjacency();
  hc.dyn = double_integrator();
  hc.u_lo = u1(-3.2);
  hc.u_hi = u1(3.2);

  auto constant_mode = [&](double level, const std::string& succ) {
    ModeDesign d;
    SimplexController c;
    c.simplex = 0;
    c.K = Mat::Zero(1, 2);
    c.g = u1(level);
    c.vertex_controls = {u1(level), u1(level), u1(level)};
    d.ctrl.by_simplex[0] = c;
    d.target = {-0.5, 0.5, succ};
    return d;
  };
  hc.modes["m"] = constant_mode(-1.0, "m2");
  hc.modes["m2"] = constant_mode(-1.5, "m");
  return hc;
}

}  // namespace

TEST_CASE("spec bands classify maneuver states") {
  SpecSet specs = maneuver_specs();

  SpecFlags cruising = check_specs(specs, v2(0, 1));
  CHECK(cruising.safe());
  CHECK(cruising.live());

  // Crawling near the origin: inside every band, but nothing vouches for
  // progress.
  SpecFlags crawling = check_specs(specs, v2(0, 0.1));
  CHECK(crawling.safe());
  CHECK_FALSE(crawling.live());
  CHECK_FALSE(crawling.liveness[0]);
  CHECK_FALSE(crawling.liveness[1]);
  CHECK_FALSE(crawling.liveness[2]);

  SpecFlags overshoot = check_specs(specs, v2(2.6, 0));
  CHECK_FALSE(overshoot.safe());
  CHECK_FALSE(overshoot.safety[0]);
  CHECK(overshoot.safety[1]);
  CHECK(overshoot.live());  // far out counts as a turnaround envelope

  // Bounds hold with zero slack: the edge itself is in.
  CHECK(check_specs(specs, v2(2.5, 0)).safety[0]);
  CHECK(check_specs(specs, v2(0, 0.6)).liveness[0]);
}

TEST_CASE("pitch command converts acceleration to tilt") {
  CHECK(pitch_command(3.1421) == doctest::Approx(0.30997107892720616).epsilon(1e-12));
  CHECK(pitch_command(-1.0) == doctest::Approx(-0.10158590543965393).epsilon(1e-12));
  CHECK(pitch_command(0.0) == 0.0);
}

TEST_CASE("integration step matches the closed form exactly") {
  AffineDynamics dyn = double_integrator();
  Vec next = rk4_step(dyn, v2(0, 2), u1(-2), 1.0);
  CHECK(next(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(next(1)) < 1e-15);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> val(-3.0, 3.0);
  std::uniform_real_distribution<double> step(0.001, 0.5);
  for (int k = 0; k < 200; ++k) {
    Vec s = v2(val(rng), val(rng));
    double u = val(rng), dt = step(rng);
    Vec got = rk4_step(dyn, s, u1(u), dt);
    double x = s(0) + s(1) * dt + 0.5 * u * dt * dt;
    double v = s(1) + u * dt;
    CHECK(std::abs(got(0) - x) <= 1e-12);
    CHECK(std::abs(got(1) - v) <= 1e-12);
  }
}

TEST_CASE("velocity sign change inside the window switches the mode") {
  HybridController hc = toy_controller();
  Scenario sc;
  sc.x0 = v2(-0.5, 1.05);
  sc.mode0 = "m";
  sc.duration = 1.5;
  sc.dt = 0.1;

  RunResult r = run_scenario(hc, sc, maneuver_specs());
  CHECK(r.status == RunStatus::completed);
  REQUIRE(r.rows.size() == 16);

  // Braking at -1 from (x,v)=(-0.5,1.05) stops at t=1.05; the samples at 1.0
  // and 1.1 straddle the stop and interpolate to x=0.05 halfway between.
  REQUIRE(r.crossings.size() == 1);
  CHECK(r.crossings[0].t == doctest::Approx(1.05).epsilon(1e-12));
  CHECK(r.crossings[0].x == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(r.crossings[0].from == "m");
  CHECK(r.crossings[0].to == "m2");

  for (const auto& row : r.rows) {
    if (row.t <= 1.0) {
      CHECK(row.mode == "m");
      CHECK(row.u(0) == doctest::Approx(-1.0));
    } else {
      CHECK(row.mode == "m2");
      CHECK(row.u(0) == doctest::Approx(-1.5));
    }
    CHECK(row.simplex == 0);
    CHECK(row.theta_d == doctest::Approx(pitch_command(row.u(0))).epsilon(1e-15));
  }
  // Sample times come from multiplication, not accumulation.
  CHECK(r.rows[15].t == 1.5);

  bool saw_cross = false, saw_switch = false;
  for (const auto& e : r.events) {
    if (e.kind == "facet-cross") saw_cross = true;
    if (e.kind == "mode-switch") {
      saw_switch = true;
      CHECK(e.detail.find("m -> m2") != std::string::npos);
    }
  }
  CHECK(saw_cross);
  CHECK(saw_switch);
}

TEST_CASE("impulse and teleport rewrite the state at their sample") {
  HybridController hc = toy_controller();
  Scenario sc;
  sc.x0 = v2(-0.5, 1.0);
  sc.mode0 = "m";
  sc.duration = 1.0;
  sc.dt = 0.25;
  DisturbanceEvent imp;
  imp.kind = DisturbanceEvent::Kind::impulse;
  imp.t = 0.5;
  imp.delta = v2(0, 0.5);
  sc.events = {imp};

  RunResult r = run_scenario(hc, sc, maneuver_specs());
  // Undisturbed v(0.5) = 0.5; the kick lands before the row is logged.
  CHECK(r.rows[2].t == doctest::Approx(0.5));
  CHECK(r.rows[2].s(1) == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(r.events.size() >= 1);
  CHECK(r.events[0].kind == "disturbance");
  CHECK(r.events[0].detail.find("impulse") != std::string::npos);

  DisturbanceEvent tp;
  tp.kind = DisturbanceEvent::Kind::teleport;
  tp.t = 0.25;
  tp.delta = v2(0.2, -0.3);
  sc.events = {tp};
  RunResult r2 = run_scenario(hc, sc, maneuver_specs());
  CHECK(r2.rows[1].s(0) == 0.2);
  CHECK(r2.rows[1].s(1) == -0.3);
}

TEST_CASE("hold freezes the state and postpones the crossing") {
  HybridController hc = toy_controller();
  Scenario sc;
  sc.x0 = v2(-0.5, 1.05);
  sc.mode0 = "m";
  sc.duration = 2.0;
  sc.dt = 0.1;
  DisturbanceEvent hold;
  hold.kind = DisturbanceEvent::Kind::hold;
  hold.t = 0.4;
  hold.duration = 0.5;
  sc.events = {hold};

  RunResult r = run_scenario(hc, sc, maneuver_specs());
  // Frozen rows t = 0.4 .. 0.9 all show the state reached at 0.4.
  Vec frozen = r.rows[4].s;
  CHECK(frozen(1) == doctest::Approx(0.65).epsilon(1e-12));
  for (int k = 4; k <= 9; ++k) {
    CHECK(r.rows[k].s(0) == frozen(0));
    CHECK(r.rows[k].s(1) == frozen(1));
  }
  CHECK(r.rows[10].s(1) < 0.65);

  // Without the hold the crossing lands at t = 1.05; the freeze shifts it by
  // exactly its span.
  REQUIRE(r.crossings.size() == 1);
  CHECK(r.crossings[0].t == doctest::Approx(1.55).epsilon(1e-9));
}

TEST_CASE("outside the region a recovery law steers back in") {
  HybridController hc = toy_controller();
  Scenario sc;
  sc.x0 = v2(3.2, -1.0);  // right of the triangle, inside the recovery belt
  sc.mode0 = "m";
  sc.duration = 1.0;
  sc.dt = 0.01;

  RunResult r = run_scenario(hc, sc, maneuver_specs());
  CHECK(r.status == RunStatus::completed);
  CHECK(r.rows[0].simplex == -1);
  CHECK(r.events[0].kind == "outside-domain");
  bool reentered = false;
  for (const auto& row : r.rows) {
    if (row.simplex >= 0) reentered = true;
  }
  CHECK(reentered);
}

TEST_CASE("far outside the recovery belt the run is lost") {
  HybridController hc = toy_controller();
  Scenario sc;
  sc.x0 = v2(8.2, 0.0);
  sc.mode0 = "m";
  sc.duration = 1.0;
  sc.dt = 0.1;

  RunResult r = run_scenario(hc, sc, maneuver_specs());
  CHECK(r.status == RunStatus::lost);
  CHECK(r.rows.size() == 1);
  REQUIRE(!r.events.empty());
  CHECK(r.events.back().kind == "lost");
}

TEST_CASE("safety violations are reported once per falling edge") {
  Scenario sc;
  sc.x0 = v2(1.5, 1.0);
  sc.mode0 = "";
  sc.duration = 1.0;
  sc.dt = 0.25;
  auto coast = [](double, const Vec&) { return Vec::Zero(1); };

  RunResult r = run_baseline(double_integrator(), coast, sc, maneuver_specs(), {});
  // Coasting right at v = 1, the braking envelope x + 0.65 v <= 2.5 is the
  // first band to break: strictly after t = 0.35, so at the t = 0.5 sample.
  int hits = 0;
  for (const auto& e : r.events) {
    if (e.kind == "spec-violation") {
      ++hits;
      CHECK(e.t == doctest::Approx(0.5));
      CHECK(e.detail == "S3");
    }
  }
  CHECK(hits == 1);
  CHECK(r.rows[1].flags.safe());
  CHECK_FALSE(r.rows[2].flags.safe());
}

TEST_CASE("baseline runs label crossings without switching") {
  Scenario sc;
  sc.x0 = v2(-0.5, 1.05);
  sc.mode0 = "";
  sc.duration = 1.5;
  sc.dt = 0.1;
  auto brake = [](double, const Vec&) { return Vec::Constant(1, -1.0); };
  std::vector<TargetSet> windows = {{-0.5, 0.5, "origin"}};

  RunResult r = run_baseline(double_integrator(), brake, sc, maneuver_specs(), windows);
  REQUIRE(r.crossings.size() == 1);
  CHECK(r.crossings[0].t == doctest::Approx(1.05).epsilon(1e-12));
  CHECK(r.crossings[0].x == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(r.crossings[0].from == "baseline");
  CHECK(r.crossings[0].to == "origin");
  for (const auto& row : r.rows) CHECK(row.mode == "baseline");
  for (const auto& e : r.events) CHECK(e.kind != "mode-switch");
}

TEST_CASE("zero-duration scenarios log exactly the initial sample") {
  HybridController hc = toy_controller();
  Scenario sc;
  sc.x0 = v2(0, 0);
  sc.mode0 = "m";
  sc.duration = 0.0;
  sc.dt = 0.1;
  RunResult r = run_scenario(hc, sc, maneuver_specs());
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].t == 0.0);
}

TEST_CASE("repeated runs are bitwise identical") {
  HybridController hc = toy_controller();
  Scenario sc;
  sc.x0 = v2(-0.5, 1.0);
  sc.mode0 = "m";
  sc.duration = 1.5;
  sc.dt = 0.01;
  DisturbanceEvent imp;
  imp.kind = DisturbanceEvent::Kind::impulse;
  imp.t = 0.3;
  imp.delta = v2(0, 0.2);
  sc.events = {imp};

  RunResult a = run_scenario(hc, sc, maneuver_specs());
  RunResult b = run_scenario(hc, sc, maneuver_specs());
  REQUIRE(a.rows.size() == b.rows.size());
  for (size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].t == b.rows[i].t);
    CHECK(a.rows[i].s == b.rows[i].s);
    CHECK(a.rows[i].u == b.rows[i].u);
    CHECK(a.rows[i].theta_d == b.rows[i].theta_d);
  }
  REQUIRE(a.crossings.size() == b.crossings.size());
  for (size_t i = 0; i < a.crossings.size(); ++i) {
    CHECK(a.crossings[i].t == b.crossings[i].t);
    CHECK(a.crossings[i].x == b.crossings[i].x);
  }
}

TEST_CASE("scenario validation rejects broken configurations") {
  HybridController hc = toy_controller();
  Scenario sc;
  sc.x0 = v2(0, 0);
  sc.mode0 = "nope";
  sc.duration = 1.0;
  sc.dt = 0.1;
  CHECK_THROWS_AS(run_scenario(hc, sc, maneuver_specs()), std::invalid_argument);

  sc.mode0 = "m";
  sc.dt = -0.1;
  CHECK_THROWS_AS(run_scenario(hc, sc, maneuver_specs()), std::invalid_argument);

  sc.dt = 0.1;
  hc.modes.at("m").target.successor = "ghost";
  CHECK_THROWS_AS(run_scenario(hc, sc, maneuver_specs()), std::invalid_argument);
}
