#include "rcp/geometry.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <stdexcept>

#include "rcp/lp.hpp"

namespace rcp {

Vec Simplex::centroid() const {
  Vec c = Vec::Zero(dim());
  for (const auto& v : verts) c += v;
  return c / static_cast<double>(verts.size());
}

double Simplex::max_edge() const {
  double m = 0.0;
  for (size_t i = 0; i < verts.size(); ++i)
    for (size_t j = i + 1; j < verts.size(); ++j)
      m = std::max(m, (verts[i] - verts[j]).norm());
  return m;
}

double Simplex::edge_volume() const {
  const int n = dim();
  Mat E(n, n);
  for (int i = 0; i < n; ++i) E.col(i) = verts[i + 1] - verts[0];
  return std::abs(E.determinant());
}

bool Simplex::degenerate() const {
  const int n = dim();
  if (static_cast<int>(verts.size()) != n + 1) return true;
  double scale = max_edge();
  if (scale <= 0.0) return true;
  return edge_volume() < 1e-12 * std::pow(scale, n);
}

namespace {

void require_valid(const Simplex& s) {
  if (s.degenerate()) {
    throw std::invalid_argument("degenerate simplex id=" + std::to_string(s.id));
  }
}

}  // namespace

Vec facet_normal(const Simplex& s, int facet) {
  require_valid(s);
  const int n = s.dim();
  if (facet < 0 || facet > n) throw std::invalid_argument("facet index out of range");

  std::vector<int> on;  // vertices lying on the facet
  for (int i = 0; i <= n; ++i)
    if (i != facet) on.push_back(i);

  // Null direction of the facet's span, from the last column of a full QR.
  Mat D(n, n - 1);
  for (int k = 1; k < n; ++k) D.col(k - 1) = s.verts[on[k]] - s.verts[on[0]];
  Eigen::HouseholderQR<Mat> qr(D);
  Mat Q = qr.householderQ();
  Vec h = Q.col(n - 1);

  if (h.dot(s.verts[on[0]] - s.verts[facet]) < 0.0) h = -h;
  return h / h.norm();
}

Vec barycentric(const Simplex& s, const Vec& p) {
  require_valid(s);
  const int n = s.dim();
  Mat M(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) {
    M.block(0, i, n, 1) = s.verts[i];
    M(n, i) = 1.0;
  }
  Vec rhs(n + 1);
  rhs.head(n) = p;
  rhs(n) = 1.0;
  return Eigen::PartialPivLU<Mat>(M).solve(rhs);
}

bool contains(const Simplex& s, const Vec& p, double tol) {
  return barycentric(s, p).minCoeff() >= -tol;
}

Vec nearest_point(const Simplex& s, const Vec& p) {
  if (s.dim() != 2) throw std::invalid_argument("nearest_point expects 2-D simplices");
  if (contains(s, p, kContainTol)) return p;
  double best = lp::kInf;
  Vec arg = s.verts[0];
  for (int i = 0; i < 3; ++i) {
    const Vec& a = s.verts[i];
    const Vec& b = s.verts[(i + 1) % 3];
    Vec ab = b - a;
    double t = ab.squaredNorm() > 0.0 ? (p - a).dot(ab) / ab.squaredNorm() : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    Vec q = a + t * ab;
    double d = (p - q).norm();
    if (d < best) { best = d; arg = q; }
  }
  return arg;
}

Simplex Triangulation::simplex(int id) const {
  Simplex s;
  s.id = id;
  for (int label : simplices[id]) s.verts.push_back(vertices[label]);
  return s;
}

void Triangulation::build_adjacency() {
  const int n = dim();
  adjacency.assign(size(), std::vector<int>(n + 1, -1));
  std::map<std::vector<int>, std::vector<std::pair<int, int>>> by_facet;
  for (int sid = 0; sid < size(); ++sid) {
    for (int f = 0; f <= n; ++f) {
      std::vector<int> key;
      for (int i = 0; i <= n; ++i)
        if (i != f) key.push_back(simplices[sid][i]);
      std::sort(key.begin(), key.end());
      by_facet[key].push_back({sid, f});
    }
  }
  for (const auto& [key, users] : by_facet) {
    if (users.size() == 2) {
      adjacency[users[0].first][users[0].second] = users[1].first;
      adjacency[users[1].first][users[1].second] = users[0].first;
    }
  }
}

int Triangulation::locate(const Vec& p, int hint, double tol) const {
  if (hint >= 0 && hint < size() && contains(simplex(hint), p, tol)) return hint;
  for (int sid = 0; sid < size(); ++sid) {
    if (contains(simplex(sid), p, tol)) return sid;
  }
  return -1;
}

std::pair<Vec, Vec> region_bbox(const std::vector<LinIneq>& region, int dim) {
  Vec lo(dim), hi(dim);
  for (int k = 0; k < dim; ++k) {
    for (int side = 0; side < 2; ++side) {
      lp::Problem p = lp::Problem::sized(dim, static_cast<int>(region.size()), 0);
      p.c(k) = side == 0 ? 1.0 : -1.0;
      for (size_t r = 0; r < region.size(); ++r) {
        p.Aub.row(r) = region[r].c.transpose();
        p.bub(r) = region[r].d;
      }
      auto res = lp::solve(p);
      double v = res.status == lp::Status::Optimal ? res.x(k)
               : (side == 0 ? -lp::kInf : lp::kInf);
      (side == 0 ? lo(k) : hi(k)) = v;
    }
  }
  return {lo, hi};
}

namespace {

// Largest margin by which a point can sit inside both simplices at once:
// maximize delta subject to every barycentric coordinate of p (affine in p)
// being >= delta in each simplex. Positive optimum = interior overlap.
double overlap_margin(const Simplex& a, const Simplex& b) {
  const int n = a.dim();
  auto bary_rows = [&](const Simplex& s, Mat& R, Vec& q) {
    Mat M(n + 1, n + 1);
    for (int i = 0; i <= n; ++i) {
      M.block(0, i, n, 1) = s.verts[i];
      M(n, i) = 1.0;
    }
    Mat Minv = M.inverse();
    R = Minv.leftCols(n);
    q = Minv.col(n);
  };
  Mat Ra, Rb;
  Vec qa, qb;
  bary_rows(a, Ra, qa);
  bary_rows(b, Rb, qb);

  // Variables (p, delta): rows  delta - lambda_i(p) <= 0.
  lp::Problem p = lp::Problem::sized(n + 1, 2 * (n + 1), 0);
  p.c(n) = -1.0;
  for (int i = 0; i <= n; ++i) {
    p.Aub.block(i, 0, 1, n) = -Ra.row(i);
    p.Aub(i, n) = 1.0;
    p.bub(i) = qa(i);
    p.Aub.block(n + 1 + i, 0, 1, n) = -Rb.row(i);
    p.Aub(n + 1 + i, n) = 1.0;
    p.bub(n + 1 + i) = qb(i);
  }
  auto res = lp::solve(p);
  return res.status == lp::Status::Optimal ? res.x(n) : -lp::kInf;
}

}  // namespace

ValidationReport validate_triangulation(const Triangulation& tri,
                                        const std::vector<LinIneq>& region,
                                        int n_samples, unsigned seed) {
  ValidationReport rep;
  auto flag = [&](const std::string& v) {
    rep.valid = false;
    if (rep.violations.size() < 200) rep.violations.push_back(v);
  };

  if (tri.size() == 0) {
    flag("triangulation has no simplices");
    return rep;
  }
  const int n = tri.dim();

  for (int sid = 0; sid < tri.size(); ++sid) {
    const auto& labels = tri.simplices[sid];
    if (static_cast<int>(labels.size()) != n + 1) {
      flag("simplex " + std::to_string(sid) + " has wrong vertex count");
      continue;
    }
    for (int l : labels) {
      if (l < 0 || l >= static_cast<int>(tri.vertices.size())) {
        flag("simplex " + std::to_string(sid) + " references missing vertex");
      }
    }
    Simplex s = tri.simplex(sid);
    if (s.degenerate()) {
      flag("simplex " + std::to_string(sid) + " is degenerate");
      continue;
    }
    // Outward-normal sanity on every facet.
    for (int f = 0; f <= n; ++f) {
      Vec h = facet_normal(s, f);
      for (int j = 0; j <= n; ++j) {
        if (j != f && h.dot(s.verts[j] - s.verts[f]) <= 0.0) {
          flag("simplex " + std::to_string(sid) + " facet " + std::to_string(f) +
               " normal is not outward");
        }
      }
    }
  }
  if (!rep.valid) return rep;  // structural basics first, geometry below

  // Duplicate simplices and over-shared facets.
  {
    std::map<std::vector<int>, int> seen;
    for (int sid = 0; sid < tri.size(); ++sid) {
      std::vector<int> key = tri.simplices[sid];
      std::sort(key.begin(), key.end());
      auto [it, fresh] = seen.insert({key, sid});
      if (!fresh) {
        flag("simplices " + std::to_string(it->second) + " and " +
             std::to_string(sid) + " share all vertices");
      }
    }
    std::map<std::vector<int>, int> facet_uses;
    for (int sid = 0; sid < tri.size(); ++sid) {
      for (int f = 0; f <= n; ++f) {
        std::vector<int> key;
        for (int i = 0; i <= n; ++i)
          if (i != f) key.push_back(tri.simplices[sid][i]);
        std::sort(key.begin(), key.end());
        if (++facet_uses[key] > 2) {
          flag("facet shared by more than two simplices (simplex " +
               std::to_string(sid) + ")");
        }
      }
    }
  }

  // Hanging vertices: a global vertex inside or on a simplex that does not
  // list it breaks the shared-face property.
  for (int v = 0; v < static_cast<int>(tri.vertices.size()); ++v) {
    for (int sid = 0; sid < tri.size(); ++sid) {
      const auto& labels = tri.simplices[sid];
      if (std::find(labels.begin(), labels.end(), v) != labels.end()) continue;
      if (contains(tri.simplex(sid), tri.vertices[v], 1e-9)) {
        flag("vertex " + std::to_string(v) + " touches simplex " +
             std::to_string(sid) + " without being one of its vertices");
      }
    }
  }

  // Pairwise interior overlaps.
  for (int a = 0; a < tri.size(); ++a) {
    for (int b = a + 1; b < tri.size(); ++b) {
      if (overlap_margin(tri.simplex(a), tri.simplex(b)) > 1e-9) {
        flag("simplices " + std::to_string(a) + " and " + std::to_string(b) +
             " have overlapping interiors");
      }
    }
  }

  // Region containment of the pieces (centroid test) and sampled coverage.
  auto in_region = [&](const Vec& x, double tol) {
    for (const auto& iq : region)
      if (iq.c.dot(x) > iq.d + tol) return false;
    return true;
  };
  for (int sid = 0; sid < tri.size(); ++sid) {
    if (!in_region(tri.simplex(sid).centroid(), 1e-9)) {
      flag("centroid of simplex " + std::to_string(sid) + " violates the region");
    }
  }

  if (!region.empty() && n_samples > 0) {
    auto [lo, hi] = region_bbox(region, n);
    if (!lo.allFinite() || !hi.allFinite()) {
      flag("region is unbounded; coverage sampling impossible");
      return rep;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int kept = 0, misses = 0;
    for (int k = 0; k < n_samples; ++k) {
      Vec x(n);
      for (int i = 0; i < n; ++i) x(i) = lo(i) + (hi(i) - lo(i)) * unit(rng);
      if (!in_region(x, 0.0)) continue;
      ++kept;
      if (tri.locate(x) < 0) {
        ++misses;
        if (misses <= 20) {
          std::string pt = "(";
          for (int i = 0; i < n; ++i) pt += std::to_string(x(i)) + (i + 1 < n ? "," : ")");
          flag("region point " + pt + " is not covered by any simplex");
        }
      }
    }
    if (misses > 20) flag(std::to_string(misses - 20) + " further uncovered points");
    rep.samples = kept;
  }

  return rep;
}

}  // namespace rcp
