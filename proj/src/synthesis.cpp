#include "rcp/synthesis.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <set>
#include <stdexcept>

#include "rcp/lp.hpp"

namespace rcp {

namespace {

constexpr double kAuthorityTol = 1e-12;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// One invariance inequality: keep the flow at vertex `local` from leaving
// through restricted facet `facet`:  coef . u <= rhs, margin already folded
// into rhs when the row has control authority.
struct InvRow {
  int facet = -1;
  int local = -1;
  Vec coef;
  double rhs = 0.0;

  std::string describe(int simplex_id) const {
    std::string lhs;
    for (int k = 0; k < coef.size(); ++k) {
      if (k) lhs += " + ";
      lhs += num(coef(k)) + "*u" + std::to_string(k);
    }
    return "simplex " + std::to_string(simplex_id) + ", facet " + std::to_string(facet) +
           ", vertex " + std::to_string(local) + ": " + lhs + " <= " + num(rhs);
  }
};

struct RowBuild {
  std::vector<InvRow> rows;
  // Rows without control authority are plain preconditions on the drift; the
  // first violated one is recorded here.
  std::optional<std::string> precondition_failure;
};

RowBuild build_rows(const Simplex& s, const AffineDynamics& dyn,
                    const std::vector<int>& restricted, double margin) {
  RowBuild out;
  const int n = s.dim();
  for (int j : restricted) {
    Vec h = facet_normal(s, j);
    Vec hB = dyn.B.transpose() * h;
    bool authority = hB.cwiseAbs().maxCoeff() > kAuthorityTol;
    for (int i = 0; i <= n; ++i) {
      if (i == j) continue;
      double drift = h.dot(dyn.A * s.verts[i] + dyn.a);
      if (!authority) {
        if (drift > 1e-12 * (1.0 + s.verts[i].norm()) && !out.precondition_failure) {
          out.precondition_failure =
              "facet " + std::to_string(j) + " of simplex " + std::to_string(s.id) +
              " cannot be held at vertex " + std::to_string(i) + ": outward drift " +
              num(drift) + " with no control authority";
        }
        continue;
      }
      InvRow r;
      r.facet = j;
      r.local = i;
      r.coef = hB;
      r.rhs = -drift - margin;
      out.rows.push_back(r);
    }
  }
  return out;
}

std::vector<int> restricted_of(const std::vector<FacetRole>& roles) {
  std::vector<int> out;
  for (size_t f = 0; f < roles.size(); ++f)
    if (roles[f] == FacetRole::restricted) out.push_back(static_cast<int>(f));
  return out;
}

}  // namespace

std::optional<std::vector<Vec>> invariance_lp(const Simplex& s, const AffineDynamics& dyn,
                                              const std::vector<int>& restricted,
                                              const Vec& u_lo, const Vec& u_hi, double margin,
                                              LpObjective objective) {
  if (restricted.empty()) throw std::invalid_argument("at least one restricted facet required");
  const int n = s.dim();
  const int nu = dyn.nu();
  RowBuild rb = build_rows(s, dyn, restricted, margin);
  if (rb.precondition_failure) return std::nullopt;

  const int nctl = (n + 1) * nu;
  const bool effort = objective == LpObjective::MinEffort;
  const int nvar = effort ? 2 * nctl : nctl;
  const int naux = effort ? 2 * nctl : 0;
  lp::Problem p = lp::Problem::sized(nvar, static_cast<int>(rb.rows.size()) + naux, 0);

  for (size_t r = 0; r < rb.rows.size(); ++r) {
    const InvRow& row = rb.rows[r];
    for (int k = 0; k < nu; ++k) p.Aub(r, row.local * nu + k) = row.coef(k);
    p.bub(r) = row.rhs;
  }
  for (int i = 0; i <= n; ++i) {
    for (int k = 0; k < nu; ++k) {
      p.lo(i * nu + k) = u_lo(k);
      p.hi(i * nu + k) = u_hi(k);
    }
  }
  if (effort) {
    // t >= |u| epigraph per control component; minimize sum t.
    int base = static_cast<int>(rb.rows.size());
    for (int v = 0; v < nctl; ++v) {
      p.Aub(base + 2 * v, v) = 1.0;
      p.Aub(base + 2 * v, nctl + v) = -1.0;
      p.Aub(base + 2 * v + 1, v) = -1.0;
      p.Aub(base + 2 * v + 1, nctl + v) = -1.0;
      p.lo(nctl + v) = 0.0;
      p.c(nctl + v) = 1.0;
    }
  }

  auto res = lp::solve(p);
  if (res.status != lp::Status::Optimal) return std::nullopt;
  std::vector<Vec> controls(n + 1, Vec::Zero(nu));
  for (int i = 0; i <= n; ++i)
    for (int k = 0; k < nu; ++k) controls[i](k) = res.x(i * nu + k);
  return controls;
}

SimplexController affine_feedback(const Simplex& s, const std::vector<Vec>& vertex_controls) {
  const int n = s.dim();
  if (static_cast<int>(vertex_controls.size()) != static_cast<int>(s.verts.size())) {
    throw std::invalid_argument("need one control per vertex");
  }
  if (s.degenerate()) {
    throw std::invalid_argument("degenerate simplex id=" + std::to_string(s.id));
  }
  const int nu = static_cast<int>(vertex_controls[0].size());
  Mat M(n + 1, n + 1);
  Mat U(n + 1, nu);
  for (int i = 0; i <= n; ++i) {
    M.block(i, 0, 1, n) = s.verts[i].transpose();
    M(i, n) = 1.0;
    U.row(i) = vertex_controls[i].transpose();
  }
  Mat X = Eigen::PartialPivLU<Mat>(M).solve(U);  // stacked [K^T; g^T]
  SimplexController c;
  c.simplex = s.id;
  c.vertex_controls = vertex_controls;
  c.K = X.topRows(n).transpose();
  c.g = X.row(n).transpose();
  return c;
}

bool equilibrium_check(const AffineDynamics& dyn, const SimplexController& ctrl,
                       const Simplex& s, double tol, Vec* where) {
  const int n = s.dim();
  Mat M = dyn.A + dyn.B * ctrl.K;
  Vec w = dyn.a + dyn.B * ctrl.g;
  Eigen::FullPivLU<Mat> lu(M);
  if (lu.isInvertible()) {
    Vec sstar = lu.solve(-w);
    if (contains(s, sstar, tol)) {
      if (where) *where = sstar;
      return false;
    }
    return true;
  }

  // Singular closed loop: no isolated equilibrium to solve for. The field is
  // affine, so over the simplex it is the barycentric blend of its vertex
  // values; minimize the largest |component| and test against the tolerance.
  std::vector<Vec> f(n + 1);
  for (int i = 0; i <= n; ++i) f[i] = M * s.verts[i] + w;
  // Variables lambda_0..lambda_n, t; minimize t with |f_k| <= t rows.
  lp::Problem p = lp::Problem::sized(n + 2, 2 * n, 1);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i <= n; ++i) {
      p.Aub(2 * k, i) = f[i](k);
      p.Aub(2 * k + 1, i) = -f[i](k);
    }
    p.Aub(2 * k, n + 1) = -1.0;
    p.Aub(2 * k + 1, n + 1) = -1.0;
  }
  p.Aeq.row(0).head(n + 1).setOnes();
  p.beq(0) = 1.0;
  for (int i = 0; i <= n; ++i) {
    p.lo(i) = 0.0;
    p.hi(i) = 1.0;
  }
  p.lo(n + 1) = 0.0;
  p.c(n + 1) = 1.0;
  auto res = lp::solve(p);
  if (res.status != lp::Status::Optimal) {
    throw std::runtime_error("equilibrium check: field-minimum LP failed unexpectedly");
  }
  if (res.x(n + 1) <= tol) {
    if (where) {
      Vec pt = Vec::Zero(n);
      for (int i = 0; i <= n; ++i) pt += res.x(i) * s.verts[i];
      *where = pt;
    }
    return false;
  }
  return true;
}

namespace {

// Control-value groups: one variable per global vertex, split further at
// declared discontinuity vertices (explicit partition, or per-simplex when
// none is given).
struct GroupIndex {
  std::map<std::pair<int, int>, int> var_of;       // (vertex, group) -> variable
  std::map<std::pair<int, int>, int> group_of_sv;  // (simplex, vertex) -> group
  int count = 0;

  int group(int sid, int vertex) const { return group_of_sv.at({sid, vertex}); }
  int var(int sid, int vertex) const { return var_of.at({vertex, group(sid, vertex)}); }
};

GroupIndex build_groups(const Triangulation& tri, const ContinuitySpec& cont) {
  GroupIndex gi;
  std::set<int> disc(cont.discontinuity_vertices.begin(), cont.discontinuity_vertices.end());
  for (int v : disc) {
    if (v < 0 || v >= static_cast<int>(tri.vertices.size())) {
      throw std::invalid_argument("discontinuity vertex " + std::to_string(v) + " out of range");
    }
  }
  std::map<int, std::vector<int>> incident;
  for (int sid = 0; sid < tri.size(); ++sid)
    for (int v : tri.simplices[sid]) incident[v].push_back(sid);

  for (auto& [v, sids] : incident) {
    if (!disc.count(v)) {
      for (int sid : sids) gi.group_of_sv[{sid, v}] = 0;
      gi.var_of[{v, 0}] = gi.count++;
      continue;
    }
    auto it = cont.groups.find(v);
    if (it == cont.groups.end()) {
      int g = 0;
      for (int sid : sids) {
        gi.group_of_sv[{sid, v}] = g;
        gi.var_of[{v, g}] = gi.count++;
        ++g;
      }
      continue;
    }
    std::set<int> seen;
    for (size_t g = 0; g < it->second.size(); ++g) {
      for (int sid : it->second[g]) {
        if (std::find(sids.begin(), sids.end(), sid) == sids.end()) {
          throw std::invalid_argument("discontinuity group for vertex " + std::to_string(v) +
                                      " names simplex " + std::to_string(sid) +
                                      " which does not touch it");
        }
        if (!seen.insert(sid).second) {
          throw std::invalid_argument("simplex " + std::to_string(sid) +
                                      " appears twice in groups of vertex " + std::to_string(v));
        }
        gi.group_of_sv[{sid, v}] = static_cast<int>(g);
      }
      gi.var_of[{v, static_cast<int>(g)}] = gi.count++;
    }
    for (int sid : sids) {
      if (!seen.count(sid)) {
        throw std::invalid_argument("simplex " + std::to_string(sid) +
                                    " touching discontinuity vertex " + std::to_string(v) +
                                    " is missing from its groups");
      }
    }
  }
  return gi;
}

struct PinnedBounds {
  std::vector<Vec> lo, hi;  // per group variable
};

PinnedBounds apply_pins(const GroupIndex& gi, const ContinuitySpec& cont, int nu,
                        const Vec& u_lo, const Vec& u_hi) {
  PinnedBounds b;
  b.lo.assign(gi.count, u_lo);
  b.hi.assign(gi.count, u_hi);
  for (const auto& pin : cont.pins) {
    if (pin.lo.size() != nu || pin.hi.size() != nu) {
      throw std::invalid_argument("pin on vertex " + std::to_string(pin.vertex) +
                                  " has wrong control dimension");
    }
    bool hit = false;
    for (const auto& [key, var] : gi.var_of) {
      if (key.first != pin.vertex) continue;
      if (pin.group >= 0 && pin.group != key.second) continue;
      b.lo[var] = b.lo[var].cwiseMax(pin.lo);
      b.hi[var] = b.hi[var].cwiseMin(pin.hi);
      hit = true;
    }
    if (!hit) {
      throw std::invalid_argument("pin on vertex " + std::to_string(pin.vertex) + " group " +
                                  std::to_string(pin.group) + " matches nothing");
    }
  }
  return b;
}

struct TaggedRow {
  int var = -1;  // group variable the row constrains
  int simplex = -1;
  InvRow row;
};

std::string bounds_note(const Vec& lo, const Vec& hi) {
  std::string s = "bounds [";
  for (int k = 0; k < lo.size(); ++k) {
    if (k) s += "; ";
    s += num(lo(k)) + ", " + num(hi(k));
  }
  return s + "]";
}

// The joint LP went infeasible; localize the cause. Every invariance row
// constrains a single group variable, so infeasibility is always visible
// either inside one simplex or at one shared vertex.
ModeSynthesisFailure diagnose_infeasible(const Triangulation& tri, const GroupIndex& gi,
                                         const PinnedBounds& bounds, int nu,
                                         const std::vector<TaggedRow>& rows) {
  auto group_lp = [&](const std::vector<const TaggedRow*>& sel, int var) {
    lp::Problem p = lp::Problem::sized(nu, static_cast<int>(sel.size()), 0);
    for (size_t r = 0; r < sel.size(); ++r) {
      for (int k = 0; k < nu; ++k) p.Aub(r, k) = sel[r]->row.coef(k);
      p.bub(r) = sel[r]->row.rhs;
    }
    for (int k = 0; k < nu; ++k) {
      p.lo(k) = bounds.lo[var](k);
      p.hi(k) = bounds.hi[var](k);
    }
    return lp::solve(p).status == lp::Status::Optimal;
  };

  // Pass 1: one simplex whose own rows already conflict.
  for (int sid = 0; sid < tri.size(); ++sid) {
    bool ok = true;
    std::vector<std::string> detail;
    for (int label : tri.simplices[sid]) {
      int var = gi.var(sid, label);
      std::vector<const TaggedRow*> sel;
      for (const auto& tr : rows)
        if (tr.simplex == sid && tr.var == var) sel.push_back(&tr);
      if (sel.empty()) continue;
      if (!group_lp(sel, var)) {
        ok = false;
        for (auto* tr : sel) detail.push_back(tr->row.describe(sid));
        detail.push_back("vertex " + std::to_string(label) + " " +
                         bounds_note(bounds.lo[var], bounds.hi[var]));
      }
    }
    if (!ok) {
      ModeSynthesisFailure f;
      f.reason = "invariance rows infeasible on simplex " + std::to_string(sid);
      f.simplex = sid;
      f.detail = detail;
      return f;
    }
  }

  // Pass 2: a shared vertex whose simplices demand incompatible values.
  for (const auto& [key, var] : gi.var_of) {
    std::vector<const TaggedRow*> sel;
    for (const auto& tr : rows)
      if (tr.var == var) sel.push_back(&tr);
    if (sel.empty()) continue;
    if (!group_lp(sel, var)) {
      ModeSynthesisFailure f;
      f.vertex = key.first;
      f.reason = "conflicting control requirements at shared vertex " +
                 std::to_string(key.first);
      for (auto* tr : sel) f.detail.push_back(tr->row.describe(tr->simplex));
      f.detail.push_back(bounds_note(bounds.lo[var], bounds.hi[var]));
      return f;
    }
  }

  ModeSynthesisFailure f;
  f.reason = "joint control LP infeasible";
  return f;
}

}  // namespace

std::variant<ModeController, ModeSynthesisFailure> synthesize_mode(
    const Triangulation& tri, const AffineDynamics& dyn, const RoleTable& roles,
    const Vec& u_lo, const Vec& u_hi, const ContinuitySpec& cont, double margin) {
  const int n = tri.dim();
  const int nu = dyn.nu();
  if (static_cast<int>(roles.size()) != tri.size()) {
    throw std::invalid_argument("role table size does not match the triangulation");
  }
  for (int sid = 0; sid < tri.size(); ++sid) {
    if (static_cast<int>(roles[sid].size()) != n + 1) {
      throw std::invalid_argument("simplex " + std::to_string(sid) + " needs a role per facet");
    }
    if (restricted_of(roles[sid]).empty()) {
      throw std::invalid_argument("simplex " + std::to_string(sid) + " has no restricted facet");
    }
  }

  GroupIndex gi = build_groups(tri, cont);
  PinnedBounds bounds = apply_pins(gi, cont, nu, u_lo, u_hi);

  std::vector<TaggedRow> rows;
  for (int sid = 0; sid < tri.size(); ++sid) {
    Simplex s = tri.simplex(sid);
    RowBuild rb = build_rows(s, dyn, restricted_of(roles[sid]), margin);
    if (rb.precondition_failure) {
      ModeSynthesisFailure f;
      f.reason = *rb.precondition_failure;
      f.simplex = sid;
      return f;
    }
    for (const auto& r : rb.rows) {
      TaggedRow tr;
      tr.simplex = sid;
      tr.row = r;
      tr.var = gi.var(sid, tri.simplices[sid][r.local]);
      rows.push_back(tr);
    }
  }

  // Joint LP over group variables plus |u| epigraph auxiliaries.
  const int nctl = gi.count * nu;
  lp::Problem p = lp::Problem::sized(2 * nctl, static_cast<int>(rows.size()) + 2 * nctl, 0);
  for (size_t r = 0; r < rows.size(); ++r) {
    for (int k = 0; k < nu; ++k) p.Aub(r, rows[r].var * nu + k) = rows[r].row.coef(k);
    p.bub(r) = rows[r].row.rhs;
  }
  for (int g = 0; g < gi.count; ++g) {
    for (int k = 0; k < nu; ++k) {
      p.lo(g * nu + k) = bounds.lo[g](k);
      p.hi(g * nu + k) = bounds.hi[g](k);
    }
  }
  int base = static_cast<int>(rows.size());
  for (int v = 0; v < nctl; ++v) {
    p.Aub(base + 2 * v, v) = 1.0;
    p.Aub(base + 2 * v, nctl + v) = -1.0;
    p.Aub(base + 2 * v + 1, v) = -1.0;
    p.Aub(base + 2 * v + 1, nctl + v) = -1.0;
    p.lo(nctl + v) = 0.0;
    p.c(nctl + v) = 1.0;
  }
  auto res = lp::solve(p);
  if (res.status != lp::Status::Optimal) {
    return diagnose_infeasible(tri, gi, bounds, nu, rows);
  }

  ModeController mc;
  for (int sid = 0; sid < tri.size(); ++sid) {
    Simplex s = tri.simplex(sid);
    std::vector<Vec> controls(n + 1, Vec::Zero(nu));
    for (int i = 0; i <= n; ++i) {
      int var = gi.var(sid, tri.simplices[sid][i]);
      for (int k = 0; k < nu; ++k) controls[i](k) = res.x(var * nu + k);
    }
    SimplexController ctrl = affine_feedback(s, controls);
    Vec where;
    if (!equilibrium_check(dyn, ctrl, s, 1e-9, &where)) {
      ModeSynthesisFailure f;
      f.simplex = sid;
      f.reason = "closed-loop equilibrium inside simplex " + std::to_string(sid);
      std::string pt = "(";
      for (int k = 0; k < where.size(); ++k) pt += num(where(k)) + (k + 1 < where.size() ? ", " : ")");
      f.detail.push_back("equilibrium at " + pt);
      return f;
    }
    mc.by_simplex[sid] = std::move(ctrl);
  }
  return mc;
}

ModeDesign reflect_mode(const Triangulation& tri, const ModeDesign& mode,
                        const std::string& successor) {
  const int nv = static_cast<int>(tri.vertices.size());
  std::vector<int> mirror(nv, -1);
  for (int i = 0; i < nv; ++i) {
    for (int j = 0; j < nv; ++j) {
      if ((tri.vertices[i] + tri.vertices[j]).norm() <= 1e-9 * (1.0 + tri.vertices[i].norm())) {
        mirror[i] = j;
        break;
      }
    }
    if (mirror[i] < 0) {
      throw std::invalid_argument("vertex " + std::to_string(i) +
                                  " has no mirror image; triangulation is not point-symmetric");
    }
  }
  std::map<std::vector<int>, int> by_labels;
  for (int sid = 0; sid < tri.size(); ++sid) {
    std::vector<int> key = tri.simplices[sid];
    std::sort(key.begin(), key.end());
    by_labels[key] = sid;
  }
  auto mirror_simplex = [&](int sid) {
    std::vector<int> key;
    for (int l : tri.simplices[sid]) key.push_back(mirror[l]);
    std::sort(key.begin(), key.end());
    auto it = by_labels.find(key);
    if (it == by_labels.end()) {
      throw std::invalid_argument("simplex " + std::to_string(sid) +
                                  " has no mirror image; triangulation is not point-symmetric");
    }
    return it->second;
  };

  ModeDesign out;
  out.roles.assign(tri.size(), {});
  for (const auto& [sid, sc] : mode.ctrl.by_simplex) {
    int mid = mirror_simplex(sid);
    const auto& src_labels = tri.simplices[sid];
    const auto& dst_labels = tri.simplices[mid];
    const int n = tri.dim();

    SimplexController rc;
    rc.simplex = mid;
    rc.K = sc.K;
    rc.g = -sc.g;
    rc.vertex_controls.assign(n + 1, Vec());
    std::vector<FacetRole> rroles(n + 1, FacetRole::exit);
    for (int i = 0; i <= n; ++i) {
      int dst_label = mirror[src_labels[i]];
      auto it = std::find(dst_labels.begin(), dst_labels.end(), dst_label);
      int di = static_cast<int>(it - dst_labels.begin());
      rc.vertex_controls[di] = -sc.vertex_controls[i];
      rroles[di] = mode.roles[sid][i];  // facet opposite a vertex follows it
    }
    out.ctrl.by_simplex[mid] = std::move(rc);
    out.roles[mid] = std::move(rroles);
  }
  out.target.x_lo = -mode.target.x_hi;
  out.target.x_hi = -mode.target.x_lo;
  out.target.successor = successor;
  for (int v : mode.discontinuity_vertices) out.discontinuity_vertices.push_back(mirror[v]);
  std::sort(out.discontinuity_vertices.begin(), out.discontinuity_vertices.end());
  return out;
}

namespace {

// Does the facet opposite `facet` of simplex `sid` cross the target window
// with more than a corner touch?
bool facet_meets_target(const Triangulation& tri, int sid, int facet, const TargetSet& target) {
  const double tol = 1e-9;
  std::vector<Vec> ends;
  Simplex s = tri.simplex(sid);
  for (int i = 0; i < static_cast<int>(s.verts.size()); ++i)
    if (i != facet) ends.push_back(s.verts[i]);
  double xa = ends[0](0), ya = ends[0](1);
  double xb = ends[1](0), yb = ends[1](1);
  if (std::abs(ya) <= tol && std::abs(yb) <= tol) {
    double lo = std::max(std::min(xa, xb), target.x_lo);
    double hi = std::min(std::max(xa, xb), target.x_hi);
    return hi - lo > tol;
  }
  if ((ya > tol && yb > tol) || (ya < -tol && yb < -tol)) return false;
  double t = ya / (ya - yb);
  double x = xa + t * (xb - xa);
  return x > target.x_lo + tol && x < target.x_hi - tol;
}

}  // namespace

ReachabilityReport reachability_check(const Triangulation& tri, const RoleTable& roles,
                                      const TargetSet& target) {
  if (tri.dim() != 2) throw std::invalid_argument("reachability needs a planar triangulation");
  const int n = tri.dim();
  Triangulation t = tri;
  if (t.adjacency.empty()) t.build_adjacency();

  std::vector<std::vector<int>> preds(t.size());
  std::deque<int> queue;
  std::vector<bool> reach(t.size(), false);
  for (int sid = 0; sid < t.size(); ++sid) {
    for (int f = 0; f <= n; ++f) {
      if (roles[sid][f] != FacetRole::exit) continue;
      int nb = t.adjacency[sid][f];
      if (nb >= 0) preds[nb].push_back(sid);
      if (facet_meets_target(t, sid, f, target) && !reach[sid]) {
        reach[sid] = true;
        queue.push_back(sid);
      }
    }
  }
  while (!queue.empty()) {
    int cur = queue.front();
    queue.pop_front();
    for (int p : preds[cur]) {
      if (!reach[p]) {
        reach[p] = true;
        queue.push_back(p);
      }
    }
  }
  ReachabilityReport rep;
  for (int sid = 0; sid < t.size(); ++sid)
    if (!reach[sid]) rep.unreachable.push_back(sid);
  rep.ok = rep.unreachable.empty();
  return rep;
}

ModeVerifyReport verify_mode(const Triangulation& tri, const AffineDynamics& dyn,
                             const ModeDesign& mode, const Vec& u_lo, const Vec& u_hi,
                             double tol) {
  ModeVerifyReport rep;
  const int n = tri.dim();
  std::set<int> disc(mode.discontinuity_vertices.begin(), mode.discontinuity_vertices.end());

  for (const auto& [sid, sc] : mode.ctrl.by_simplex) {
    auto& issues = rep.simplex_issues[sid];
    Simplex s = tri.simplex(sid);
    if (static_cast<int>(sc.vertex_controls.size()) != n + 1) {
      issues.push_back("wrong vertex-control count");
      continue;
    }
    // Invariance rows at every vertex of every restricted facet.
    for (int j : restricted_of(mode.roles[sid])) {
      Vec h = facet_normal(s, j);
      for (int i = 0; i <= n; ++i) {
        if (i == j) continue;
        double r = h.dot(dyn.flow(s.verts[i], sc.vertex_controls[i]));
        if (r > tol) {
          issues.push_back("facet " + std::to_string(j) + " vertex " + std::to_string(i) +
                           ": invariance residual " + num(r));
        }
      }
    }
    // Gain consistency and bounds.
    for (int i = 0; i <= n; ++i) {
      double err = (sc.eval(s.verts[i]) - sc.vertex_controls[i]).cwiseAbs().maxCoeff();
      if (err > tol) {
        issues.push_back("vertex " + std::to_string(i) + ": gain evaluation off by " + num(err));
      }
      for (int k = 0; k < sc.vertex_controls[i].size(); ++k) {
        double u = sc.vertex_controls[i](k);
        if (u < u_lo(k) - tol || u > u_hi(k) + tol) {
          issues.push_back("vertex " + std::to_string(i) + ": control " + num(u) +
                           " outside bounds");
        }
      }
    }
    Vec where;
    if (!equilibrium_check(dyn, sc, s, 1e-9, &where)) {
      std::string pt = "(";
      for (int k = 0; k < where.size(); ++k)
        pt += num(where(k)) + (k + 1 < where.size() ? ", " : ")");
      issues.push_back("closed-loop equilibrium at " + pt);
    }
  }

  // Continuity at shared vertices outside the declared discontinuity set.
  std::map<int, std::vector<std::pair<int, Vec>>> at_vertex;  // label -> (simplex, u)
  for (const auto& [sid, sc] : mode.ctrl.by_simplex) {
    for (size_t i = 0; i < tri.simplices[sid].size(); ++i) {
      at_vertex[tri.simplices[sid][i]].push_back({sid, sc.vertex_controls[i]});
    }
  }
  for (const auto& [label, users] : at_vertex) {
    if (disc.count(label)) continue;
    for (size_t k = 1; k < users.size(); ++k) {
      double err = (users[k].second - users[0].second).cwiseAbs().maxCoeff();
      if (err > tol) {
        rep.continuity_issues.push_back(
            "vertex " + std::to_string(label) + ": simplices " +
            std::to_string(users[0].first) + " and " + std::to_string(users[k].first) +
            " disagree by " + num(err));
      }
    }
  }

  rep.ok = rep.continuity_issues.empty();
  for (const auto& [sid, issues] : rep.simplex_issues)
    if (!issues.empty()) rep.ok = false;
  return rep;
}

}  // namespace rcp
