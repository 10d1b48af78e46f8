#include "rcp/executor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>

namespace rcp {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

long long sample_count(double duration, double dt) {
  if (duration <= 0.0) return 0;
  if (dt <= 0.0) throw std::invalid_argument("scenario: dt must be positive");
  double ratio = duration / dt;
  long long n = std::llround(ratio);
  if (std::abs(static_cast<double>(n) * dt - duration) > 1e-9) {
    n = static_cast<long long>(std::floor(ratio + 1e-12));
  }
  return n;
}

struct CrossingHit {
  double t, x;
};

// Zero crossings of the velocity row. Roundoff makes per-step sign tests
// unreliable near a stop: the sampled velocity can land at +-1e-16, which
// either re-triggers on the reversed flow or hides the true flip one step
// later. So the detector is armed by the last clearly nonzero velocity and
// fires once per flip of that sign, reporting the linearly interpolated
// crossing instant and position.
constexpr double kCrossTol = 1e-9;

struct CrossDetector {
  int sign = 0;

  std::optional<CrossingHit> observe(const Vec& s0, const Vec& s1, double t0, double dt) {
    double v0 = s0(1), v1 = s1(1);
    if (std::abs(v0) > kCrossTol) sign = v0 > 0.0 ? 1 : -1;
    if (sign == 0) return std::nullopt;
    bool flipped = v1 * sign < 0.0 || (v1 == 0.0 && std::abs(v0) > kCrossTol);
    if (!flipped) return std::nullopt;
    double f = v0 != v1 ? std::clamp(v0 / (v0 - v1), 0.0, 1.0) : 1.0;
    double x = s0(0) + (s1(0) - s0(0)) * f;
    sign = 0;
    return CrossingHit{t0 + f * dt, x};
  }
};

bool in_window(const TargetSet& target, double x) {
  return x >= target.x_lo && x <= target.x_hi;
}

struct SpecTracker {
  SpecFlags prev;
  bool prev_live = true;
  bool first = true;

  void observe(const SpecFlags& flags, double t, std::vector<EventRow>& events) {
    for (size_t i = 0; i < flags.safety.size(); ++i) {
      bool was_ok = first ? true : prev.safety[i];
      if (was_ok && !flags.safety[i]) {
        events.push_back({t, "spec-violation", "S" + std::to_string(i + 1)});
      }
    }
    bool live = flags.live();
    if ((first ? true : prev_live) && !live) {
      events.push_back({t, "spec-violation", "liveness"});
    }
    prev = flags;
    prev_live = live;
    first = false;
  }
};

std::string event_detail(const DisturbanceEvent& e) {
  switch (e.kind) {
    case DisturbanceEvent::Kind::impulse: {
      std::string d = "impulse";
      for (int i = 0; i < e.delta.size(); ++i) d += " " + num(e.delta(i));
      return d;
    }
    case DisturbanceEvent::Kind::teleport: {
      std::string d = "teleport to";
      for (int i = 0; i < e.delta.size(); ++i) d += " " + num(e.delta(i));
      return d;
    }
    case DisturbanceEvent::Kind::hold:
      return "hold " + num(e.duration) + "s";
  }
  return "";
}

// Applies every event due at sample time t; returns the updated hold horizon.
double apply_due_events(const std::vector<const DisturbanceEvent*>& order,
                        size_t& next, double t, Vec& s, double hold_until,
                        std::vector<EventRow>& events) {
  while (next < order.size() && order[next]->t <= t + 1e-12) {
    const DisturbanceEvent& e = *order[next];
    switch (e.kind) {
      case DisturbanceEvent::Kind::impulse:
        s += e.delta;
        break;
      case DisturbanceEvent::Kind::teleport:
        s = e.delta;
        break;
      case DisturbanceEvent::Kind::hold:
        hold_until = std::max(hold_until, t + e.duration);
        break;
    }
    events.push_back({t, "disturbance", event_detail(e)});
    ++next;
  }
  return hold_until;
}

std::vector<const DisturbanceEvent*> event_order(const Scenario& sc) {
  std::vector<const DisturbanceEvent*> order;
  order.reserve(sc.events.size());
  for (const auto& e : sc.events) order.push_back(&e);
  std::stable_sort(order.begin(), order.end(),
                   [](const DisturbanceEvent* a, const DisturbanceEvent* b) { return a->t < b->t; });
  return order;
}

}  // namespace

bool SpecFlags::safe() const {
  for (bool ok : safety) {
    if (!ok) return false;
  }
  return true;
}

bool SpecFlags::live() const {
  if (liveness.empty()) return true;
  for (bool ok : liveness) {
    if (ok) return true;
  }
  return false;
}

SpecFlags check_specs(const SpecSet& specs, const Vec& s) {
  SpecFlags flags;
  flags.safety.reserve(specs.safety.size());
  flags.liveness.reserve(specs.liveness.size());
  for (const auto& band : specs.safety) {
    flags.safety.push_back(std::abs(band.c.dot(s)) <= band.bound);
  }
  for (const auto& band : specs.liveness) {
    flags.liveness.push_back(std::abs(band.c.dot(s)) >= band.bound);
  }
  return flags;
}

double pitch_command(double u, double g) { return std::atan(u / g); }

Vec rk4_step(const AffineDynamics& dyn, const Vec& s, const Vec& u, double dt) {
  Vec k1 = dyn.flow(s, u);
  Vec k2 = dyn.flow(s + 0.5 * dt * k1, u);
  Vec k3 = dyn.flow(s + 0.5 * dt * k2, u);
  Vec k4 = dyn.flow(s + dt * k3, u);
  return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vec rk4_step(const AffineDynamics& dyn, const std::function<Vec(const Vec&)>& control,
             const Vec& s, double dt) {
  Vec k1 = dyn.flow(s, control(s));
  Vec s2 = s + 0.5 * dt * k1;
  Vec k2 = dyn.flow(s2, control(s2));
  Vec s3 = s + 0.5 * dt * k2;
  Vec k3 = dyn.flow(s3, control(s3));
  Vec s4 = s + dt * k3;
  Vec k4 = dyn.flow(s4, control(s4));
  return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vec rk4_step(const AffineDynamics& dyn,
             const std::function<Vec(double, const Vec&)>& control, double t, const Vec& s,
             double dt) {
  Vec k1 = dyn.flow(s, control(t, s));
  Vec s2 = s + 0.5 * dt * k1;
  Vec k2 = dyn.flow(s2, control(t + 0.5 * dt, s2));
  Vec s3 = s + 0.5 * dt * k2;
  Vec k3 = dyn.flow(s3, control(t + 0.5 * dt, s3));
  Vec s4 = s + dt * k3;
  Vec k4 = dyn.flow(s4, control(t + dt, s4));
  return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Advances one sampling period inside the triangulated domain. Within a
// simplex the closed loop is a single affine field, so each leg integrates
// that field alone and a bisection pins the facet-exit time before the
// neighbor's law takes over; this keeps the integration honest across control
// seams, where evaluating a blend of the two laws would smear the jump.
Vec advance_located(const HybridController& hc, const ModeController& ctrl, Vec s, int sid,
                    double span) {
  constexpr int kMaxLegs = 32;
  constexpr double kHandover = 1e-8;  // seconds past the facet, so the next
                                      // locate lands strictly in the neighbor
  std::function<Vec(const Vec&)> law;
  for (int leg = 0; sid >= 0 && leg < kMaxLegs; ++leg) {
    const SimplexController* leg_ctrl = &ctrl.by_simplex.at(sid);
    law = [&hc, leg_ctrl](const Vec& p) {
      return leg_ctrl->eval(p).cwiseMax(hc.u_lo).cwiseMin(hc.u_hi);
    };
    Vec cand = rk4_step(hc.dyn, law, s, span);
    Simplex sx = hc.tri.simplex(sid);
    if (contains(sx, cand)) return cand;
    double lo = 0.0, hi = span;
    for (int b = 0; b < 50; ++b) {
      double mid = 0.5 * (lo + hi);
      if (contains(sx, rk4_step(hc.dyn, law, s, mid))) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    double cut = std::min(span, hi + kHandover);
    s = rk4_step(hc.dyn, law, s, cut);
    span -= cut;
    if (span <= 0.0) return s;
    sid = hc.tri.locate(s, sid);
  }
  // Left the domain mid-step (or a degenerate corner): finish under the last
  // law; the per-sample recovery logic picks the state up from here.
  return law ? rk4_step(hc.dyn, law, s, span) : s;
}

RunResult run_scenario(const HybridController& hc, const Scenario& sc,
                       const SpecSet& specs) {
  if (!hc.modes.count(sc.mode0)) {
    throw std::invalid_argument("scenario: unknown initial mode " + sc.mode0);
  }
  for (const auto& [name, mode] : hc.modes) {
    if (!hc.modes.count(mode.target.successor)) {
      throw std::invalid_argument("mode " + name + ": unknown successor " +
                                  mode.target.successor);
    }
  }
  if (sc.x0.size() != static_cast<Eigen::Index>(hc.tri.dim())) {
    throw std::invalid_argument("scenario: initial state has wrong dimension");
  }

  const long long N = sample_count(sc.duration, sc.dt);
  auto [bb_lo, bb_hi] = [&] {
    Vec lo = hc.tri.vertices[0], hi = hc.tri.vertices[0];
    for (const Vec& v : hc.tri.vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    return std::make_pair(lo, hi);
  }();
  const bool can_recover = hc.tri.dim() == 2 && hc.dyn.nu() == 1;

  RunResult out;
  Vec s = sc.x0;
  std::string mode = sc.mode0;
  auto order = event_order(sc);
  size_t next_event = 0;
  double hold_until = -1.0;
  int hint = -1;
  bool was_outside = false;
  SpecTracker tracker;
  CrossDetector detector;

  for (long long k = 0;; ++k) {
    const double t = static_cast<double>(k) * sc.dt;
    hold_until = apply_due_events(order, next_event, t, s, hold_until, out.events);

    int sid = hc.tri.locate(s, hint);
    Vec u;
    if (sid >= 0) {
      hint = sid;
      was_outside = false;
      u = hc.modes.at(mode).ctrl.by_simplex.at(sid).eval(s);
    } else {
      bool beyond = false;
      for (int i = 0; i < s.size(); ++i) {
        if (s(i) < bb_lo(i) - 2.0 || s(i) > bb_hi(i) + 2.0) beyond = true;
      }
      if (beyond || !can_recover) {
        out.events.push_back({t, "lost", "state " + num(s(0)) + " " + num(s(1)) +
                                              " beyond recovery"});
        LogRow row{t, s, Vec::Zero(hc.dyn.nu()), 0.0, -1, mode, check_specs(specs, s)};
        out.rows.push_back(std::move(row));
        out.status = RunStatus::lost;
        return out;
      }
      if (!was_outside) {
        out.events.push_back({t, "outside-domain", "state " + num(s(0)) + " " + num(s(1))});
        was_outside = true;
      }
      // Steer for the nearest simplex's centroid; its interior guarantees
      // re-entry instead of skimming the boundary.
      double best = std::numeric_limits<double>::infinity();
      int best_sid = 0;
      for (int cand = 0; cand < hc.tri.size(); ++cand) {
        double d = (nearest_point(hc.tri.simplex(cand), s) - s).norm();
        if (d < best) {
          best = d;
          best_sid = cand;
        }
      }
      Vec c = hc.tri.simplex(best_sid).centroid();
      double cmd = 6.0 * (c(0) - s(0)) + 4.0 * (c(1) - s(1));
      u = Vec::Constant(1, std::clamp(cmd, hc.u_lo(0), hc.u_hi(0)));
    }

    SpecFlags flags = check_specs(specs, s);
    tracker.observe(flags, t, out.events);
    out.rows.push_back({t, s, u, pitch_command(u(0)), sid, mode, flags});

    if (k == N) break;
    if (t < hold_until - 1e-12) continue;  // frozen state, control keeps logging

    Vec s_next = sid >= 0 ? advance_located(hc, hc.modes.at(mode).ctrl, s, sid, sc.dt)
                          : rk4_step(hc.dyn, s, u, sc.dt);  // recovery command held
    if (auto hit = detector.observe(s, s_next, t, sc.dt); hit && sid >= 0) {
      const TargetSet& target = hc.modes.at(mode).target;
      if (in_window(target, hit->x)) {
        out.events.push_back({hit->t, "facet-cross", "x=" + num(hit->x) + " xdot=0"});
        out.events.push_back({hit->t, "mode-switch",
                              mode + " -> " + target.successor + " at x=" + num(hit->x)});
        out.crossings.push_back({hit->t, hit->x, mode, target.successor});
        // Split the step at the crossing so the successor's law takes over at
        // the event rather than at the next sample.
        double tau = std::clamp(hit->t - t, 0.0, sc.dt);
        Vec s_hit = advance_located(hc, hc.modes.at(mode).ctrl, s, sid, tau);
        mode = target.successor;
        int sid_hit = hc.tri.locate(s_hit, sid);
        s_next = sid_hit >= 0
                     ? advance_located(hc, hc.modes.at(mode).ctrl, s_hit, sid_hit,
                                       sc.dt - tau)
                     : rk4_step(hc.dyn, s_hit, u, sc.dt - tau);
      }
    }
    s = s_next;
  }
  return out;
}

RunResult run_baseline(const AffineDynamics& dyn,
                       const std::function<Vec(double, const Vec&)>& control,
                       const Scenario& sc, const SpecSet& specs,
                       const std::vector<TargetSet>& targets,
                       const Triangulation* tri) {
  const long long N = sample_count(sc.duration, sc.dt);

  RunResult out;
  Vec s = sc.x0;
  auto order = event_order(sc);
  size_t next_event = 0;
  double hold_until = -1.0;
  int hint = -1;
  SpecTracker tracker;
  CrossDetector detector;

  for (long long k = 0;; ++k) {
    const double t = static_cast<double>(k) * sc.dt;
    hold_until = apply_due_events(order, next_event, t, s, hold_until, out.events);

    int sid = tri ? tri->locate(s, hint) : -1;
    if (sid >= 0) hint = sid;
    Vec u = control(t, s);

    SpecFlags flags = check_specs(specs, s);
    tracker.observe(flags, t, out.events);
    out.rows.push_back({t, s, u, pitch_command(u(0)), sid, "baseline", flags});

    if (k == N) break;
    if (t < hold_until - 1e-12) continue;

    Vec s_next = rk4_step(dyn, control, t, s, sc.dt);
    if (auto hit = detector.observe(s, s_next, t, sc.dt)) {
      for (const auto& target : targets) {
        if (in_window(target, hit->x)) {
          out.events.push_back({hit->t, "facet-cross", "x=" + num(hit->x) + " xdot=0"});
          out.crossings.push_back({hit->t, hit->x, "baseline", target.successor});
          break;
        }
      }
    }
    s = s_next;
  }
  return out;
}

}  // namespace rcp
