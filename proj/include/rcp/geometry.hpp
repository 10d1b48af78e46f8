#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace rcp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Halfspace c.s <= d.
struct LinIneq {
  Vec c;
  double d = 0.0;
};

constexpr double kContainTol = 1e-9;

struct Simplex {
  int id = -1;
  std::vector<Vec> verts;  // n+1 affinely independent points in R^n

  int dim() const { return verts.empty() ? 0 : static_cast<int>(verts[0].size()); }
  Vec centroid() const;
  double max_edge() const;
  // |det| of the edge matrix (v_i - v_0); zero for flat simplices.
  double edge_volume() const;
  // Scale-aware: |det| < 1e-12 * max_edge^n.
  bool degenerate() const;
};

// Outward unit normal of the facet opposite vertex `facet`.
Vec facet_normal(const Simplex& s, int facet);

// Coefficients lambda with sum(lambda)=1 and sum(lambda_i v_i)=p.
Vec barycentric(const Simplex& s, const Vec& p);

bool contains(const Simplex& s, const Vec& p, double tol = kContainTol);

// Closest point of the simplex to p (2-D only; used by the fallback law).
Vec nearest_point(const Simplex& s, const Vec& p);

struct Triangulation {
  std::vector<Vec> vertices;               // global table; label = index
  std::vector<std::string> names;          // optional display names
  std::vector<std::vector<int>> simplices; // n+1 global labels per simplex
  std::vector<std::vector<int>> adjacency; // [simplex][facet] -> neighbor or -1

  int dim() const { return vertices.empty() ? 0 : static_cast<int>(vertices[0].size()); }
  int size() const { return static_cast<int>(simplices.size()); }
  Simplex simplex(int id) const;

  // Pairs facets that reference the same global vertex set; call after edits.
  void build_adjacency();

  // Hint simplex wins if it still contains the point, otherwise the lowest
  // containing id; -1 means outside every simplex.
  int locate(const Vec& p, int hint = -1, double tol = kContainTol) const;
};

struct ValidationReport {
  bool valid = true;
  std::vector<std::string> violations;
  int samples = 0;  // region points actually tested for coverage
};

// Checks partition structure (no overlaps, no hanging vertices, shared facets
// used at most twice) and region coverage by seeded sampling.
ValidationReport validate_triangulation(const Triangulation& tri,
                                        const std::vector<LinIneq>& region,
                                        int n_samples = 10000,
                                        unsigned seed = 1);

// Axis-aligned bounds of a halfspace-described region, one LP per side.
// Returns (lo, hi); entries are +-inf when the region is unbounded that way.
std::pair<Vec, Vec> region_bbox(const std::vector<LinIneq>& region, int dim);

}  // namespace rcp
