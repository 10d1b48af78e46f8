#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rcp/geometry.hpp"

namespace rcp {

struct AffineDynamics {
  Mat A;
  Mat B;
  Vec a;

  int n() const { return static_cast<int>(A.rows()); }
  int nu() const { return static_cast<int>(B.cols()); }
  Vec flow(const Vec& s, const Vec& u) const { return A * s + B * u + a; }
};

enum class FacetRole { exit, restricted };

// [simplex id][facet index] -> role
using RoleTable = std::vector<std::vector<FacetRole>>;

// Crossing window on the xdot = 0 axis; reaching it switches the mode.
struct TargetSet {
  double x_lo = 0.0;
  double x_hi = 0.0;
  std::string successor;
};

struct SimplexController {
  int simplex = -1;
  std::vector<Vec> vertex_controls;  // one u per local vertex
  Mat K;
  Vec g;

  Vec eval(const Vec& s) const { return K * s + g; }
};

enum class LpObjective { MinEffort, FeasibleOnly };

// Vertex controls keeping every restricted facet outflow-free:
// h_j . (A v_i + B u_i + a) <= -margin for each restricted facet j and each
// vertex i on that facet. Rows where the control cannot influence the facet
// direction (h_j^T B = 0) are pure preconditions and are accepted at zero
// slack instead of the margin. Returns nullopt when no controls exist.
std::optional<std::vector<Vec>> invariance_lp(const Simplex& s, const AffineDynamics& dyn,
                                              const std::vector<int>& restricted,
                                              const Vec& u_lo, const Vec& u_hi,
                                              double margin = 1e-6,
                                              LpObjective objective = LpObjective::MinEffort);

// Unique affine interpolant of the vertex controls: K v_i + g = u_i.
SimplexController affine_feedback(const Simplex& s, const std::vector<Vec>& vertex_controls);

// True when the closed loop (A + B K) s + (a + B g) has no zero inside the
// simplex. `where` (optional) receives the offending point on failure.
bool equilibrium_check(const AffineDynamics& dyn, const SimplexController& ctrl,
                       const Simplex& s, double tol = 1e-9, Vec* where = nullptr);

// Interval pin on one vertex-control value, tightening the global bounds.
// group = -1 applies to every control group at that vertex.
struct VertexPin {
  int vertex = -1;
  int group = -1;
  Vec lo;
  Vec hi;
};

struct ContinuitySpec {
  std::vector<int> discontinuity_vertices;
  // Partition of the incident simplices per discontinuity vertex; every
  // incident simplex must appear in exactly one group.
  std::map<int, std::vector<std::vector<int>>> groups;
  std::vector<VertexPin> pins;
};

struct ModeController {
  std::map<int, SimplexController> by_simplex;
};

struct ModeSynthesisFailure {
  std::string reason;
  int simplex = -1;  // first offending simplex, when one is identifiable
  int vertex = -1;   // offending global vertex for continuity conflicts
  std::vector<std::string> detail;
};

// One joint LP over all vertex controls of the mode: invariance rows per
// simplex, a shared value per global vertex (except declared discontinuity
// vertices), global bounds and pins, minimum total |u| as the objective.
// Followed by gain recovery and the equilibrium check on every simplex.
std::variant<ModeController, ModeSynthesisFailure> synthesize_mode(
    const Triangulation& tri, const AffineDynamics& dyn, const RoleTable& roles,
    const Vec& u_lo, const Vec& u_hi, const ContinuitySpec& cont, double margin = 1e-6);

// Everything one mode carries in a controller bundle.
struct ModeDesign {
  ModeController ctrl;
  RoleTable roles;
  TargetSet target;
  std::vector<int> discontinuity_vertices;
};

struct HybridController {
  Triangulation tri;
  AffineDynamics dyn;
  Vec u_lo;
  Vec u_hi;
  double margin = 1e-6;
  std::map<std::string, ModeDesign> modes;
};

// Odd image of a mode under s -> -s: each simplex maps to its mirrored
// partner with K' = K, g' = -g, roles carried across, the target interval
// negated, and `successor` replaced. Throws std::invalid_argument when the
// vertex table is not point-symmetric about the origin.
ModeDesign reflect_mode(const Triangulation& tri, const ModeDesign& mode,
                        const std::string& successor);

struct ReachabilityReport {
  bool ok = true;
  std::vector<int> unreachable;
};

// Directed graph with an edge across every shared facet that is an exit of
// the source simplex; succeeds when every simplex has a path to one whose
// exit facet meets the target window.
ReachabilityReport reachability_check(const Triangulation& tri, const RoleTable& roles,
                                      const TargetSet& target);

struct ModeVerifyReport {
  bool ok = true;
  // One entry per simplex of the mode; an empty issue list means PASS.
  std::map<int, std::vector<std::string>> simplex_issues;
  std::vector<std::string> continuity_issues;
};

// Re-checks a synthesized mode from its stored data: invariance rows at the
// vertices, gain/vertex-control agreement, control bounds, shared-vertex
// continuity, and equilibrium-freeness.
ModeVerifyReport verify_mode(const Triangulation& tri, const AffineDynamics& dyn,
                             const ModeDesign& mode, const Vec& u_lo, const Vec& u_hi,
                             double tol = 1e-9);

}  // namespace rcp
