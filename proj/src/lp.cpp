#include "rcp/lp.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace rcp::lp {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-7;
constexpr int kMaxIters = 20000;

struct Tableau {
  Eigen::MatrixXd T;        // (m+1) x (cols+1); last row objective, last col RHS
  std::vector<int> basis;   // basic column per constraint row
  int cols = 0;

  double rhs(int r) const { return T(r, cols); }

  void pivot(int prow, int pcol) {
    T.row(prow) /= T(prow, pcol);
    for (int r = 0; r < T.rows(); ++r) {
      if (r == prow) continue;
      double f = T(r, pcol);
      if (f != 0.0) T.row(r) -= f * T.row(prow);
    }
    basis[prow] = pcol;
  }
};

// Bland's rule: first improving column, smallest basic index on ratio ties.
// Guarantees termination on degenerate problems; pivot count is irrelevant
// at these sizes. Returns false via *unbounded when no leaving row exists.
void simplex_iterate(Tableau& tb, const std::vector<bool>& allowed, bool* unbounded) {
  const int m = static_cast<int>(tb.T.rows()) - 1;
  *unbounded = false;
  for (int iter = 0; iter < kMaxIters; ++iter) {
    int enter = -1;
    for (int j = 0; j < tb.cols; ++j) {
      if (allowed[j] && tb.T(m, j) < -kPivotTol) { enter = j; break; }
    }
    if (enter < 0) return;

    // The minimum ratio must be exact: accepting a row whose ratio is larger
    // by delta drives other basic values negative by delta times their column
    // entry, which wrecks feasibility whenever coefficients mix scales.
    // Degenerate ties are exact zeros, so Bland's index tie-break still bites.
    int leave = -1;
    double best = kInf;
    for (int r = 0; r < m; ++r) {
      double a = tb.T(r, enter);
      if (a <= kPivotTol) continue;
      double ratio = tb.rhs(r) / a;
      if (ratio < best) {
        best = ratio;
        leave = r;
      } else if (ratio == best && leave >= 0 && tb.basis[r] < tb.basis[leave]) {
        leave = r;
      }
    }
    if (leave < 0) { *unbounded = true; return; }
    tb.pivot(leave, enter);
  }
  throw std::runtime_error("lp: simplex iteration limit exceeded");
}

void set_objective(Tableau& tb, const Eigen::VectorXd& cost) {
  const int m = static_cast<int>(tb.T.rows()) - 1;
  tb.T.row(m).setZero();
  tb.T.row(m).head(cost.size()) = cost.transpose();
  for (int r = 0; r < m; ++r) {
    double cb = tb.basis[r] < cost.size() ? cost(tb.basis[r]) : 0.0;
    if (cb != 0.0) tb.T.row(m) -= cb * tb.T.row(r);
  }
}

}  // namespace

Problem Problem::sized(int nvar, int nub, int neq) {
  Problem p;
  p.c = Eigen::VectorXd::Zero(nvar);
  p.Aub = Eigen::MatrixXd::Zero(nub, nvar);
  p.bub = Eigen::VectorXd::Zero(nub);
  p.Aeq = Eigen::MatrixXd::Zero(neq, nvar);
  p.beq = Eigen::VectorXd::Zero(neq);
  p.lo = Eigen::VectorXd::Constant(nvar, -kInf);
  p.hi = Eigen::VectorXd::Constant(nvar, kInf);
  return p;
}

// Strategy: substitute each original variable by nonnegative standard-form
// variables (shift at a finite lower bound, mirror at a finite upper bound,
// split when free), append explicit rows for two-sided bounds, then run the
// textbook two-phase tableau.
Result solve(const Problem& p) {
  const int n = static_cast<int>(p.c.size());
  const int mub = static_cast<int>(p.bub.size());
  const int meq = static_cast<int>(p.beq.size());

  // x_j = shift_j + sum_k sign_k * y_k over that variable's standard columns.
  std::vector<double> shift(n, 0.0);
  std::vector<std::vector<std::pair<int, double>>> cols_of(n);
  std::vector<int> col_orig;        // standard column -> original variable
  std::vector<double> col_sign;
  std::vector<std::pair<int, double>> ub_rows;  // (standard column, rhs)
  for (int j = 0; j < n; ++j) {
    double lo = p.lo(j), hi = p.hi(j);
    if (lo > hi) return {Status::Infeasible, {}, 0.0};
    auto add_col = [&](double sgn) {
      int id = static_cast<int>(col_orig.size());
      col_orig.push_back(j);
      col_sign.push_back(sgn);
      cols_of[j].push_back({id, sgn});
      return id;
    };
    if (std::isfinite(lo)) {
      int id = add_col(1.0);
      shift[j] = lo;
      if (std::isfinite(hi)) ub_rows.push_back({id, hi - lo});
    } else if (std::isfinite(hi)) {
      add_col(-1.0);
      shift[j] = hi;
    } else {
      add_col(1.0);
      add_col(-1.0);
    }
  }
  const int ns = static_cast<int>(col_orig.size());
  const int nrows = mub + meq + static_cast<int>(ub_rows.size());

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nrows, ns);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(nrows);
  std::vector<bool> is_eq(nrows, false);
  auto fill_row = [&](int r, const Eigen::MatrixXd& src, int sr, const Eigen::VectorXd& rhs) {
    double bb = rhs(sr);
    for (int j = 0; j < n; ++j) {
      double a = src(sr, j);
      if (a == 0.0) continue;
      for (auto [col, sgn] : cols_of[j]) A(r, col) += a * sgn;
      bb -= a * shift[j];
    }
    b(r) = bb;
  };
  for (int r = 0; r < mub; ++r) fill_row(r, p.Aub, r, p.bub);
  for (int r = 0; r < meq; ++r) {
    fill_row(mub + r, p.Aeq, r, p.beq);
    is_eq[mub + r] = true;
  }
  for (size_t k = 0; k < ub_rows.size(); ++k) {
    int r = mub + meq + static_cast<int>(k);
    A(r, ub_rows[k].first) = 1.0;
    b(r) = ub_rows[k].second;
  }

  // Flip rows to nonnegative RHS; flipped inequality rows need a surplus and
  // an artificial, plain ones just a slack, equalities just an artificial.
  enum RowKind { kSlack, kSurplus, kArtOnly };
  std::vector<RowKind> kind(nrows);
  int nslack = 0, nart = 0;
  for (int r = 0; r < nrows; ++r) {
    if (b(r) < 0.0) { A.row(r) = -A.row(r); b(r) = -b(r); kind[r] = is_eq[r] ? kArtOnly : kSurplus; }
    else kind[r] = is_eq[r] ? kArtOnly : kSlack;
    if (kind[r] != kArtOnly) ++nslack;
    if (kind[r] != kSlack) ++nart;
  }

  const int total = ns + nslack + nart;
  Tableau tb;
  tb.cols = total;
  tb.T = Eigen::MatrixXd::Zero(nrows + 1, total + 1);
  tb.basis.assign(nrows, -1);

  int next_slack = ns, next_art = ns + nslack;
  for (int r = 0; r < nrows; ++r) {
    tb.T.block(r, 0, 1, ns) = A.row(r);
    tb.T(r, total) = b(r);
    switch (kind[r]) {
      case kSlack:
        tb.T(r, next_slack) = 1.0;
        tb.basis[r] = next_slack++;
        break;
      case kSurplus:
        tb.T(r, next_slack++) = -1.0;
        tb.T(r, next_art) = 1.0;
        tb.basis[r] = next_art++;
        break;
      case kArtOnly:
        tb.T(r, next_art) = 1.0;
        tb.basis[r] = next_art++;
        break;
    }
  }

  std::vector<bool> allowed(total, true);
  bool unbounded = false;

  if (nart > 0) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(total);
    for (int j = ns + nslack; j < total; ++j) phase1(j) = 1.0;
    set_objective(tb, phase1);
    simplex_iterate(tb, allowed, &unbounded);
    double infeas = -tb.T(nrows, total);  // objective row stores -z in the RHS slot
    double scale = nrows > 0 ? 1.0 + b.cwiseAbs().maxCoeff() : 1.0;
    if (infeas > kFeasTol * scale) return {Status::Infeasible, {}, 0.0};
    // Kick leftover zero-level artificials out of the basis so they cannot
    // drift during phase 2; rows with no eligible pivot are redundant.
    for (int r = 0; r < nrows; ++r) {
      if (tb.basis[r] < ns + nslack) continue;
      for (int j = 0; j < ns + nslack; ++j) {
        if (std::abs(tb.T(r, j)) > kPivotTol) { tb.pivot(r, j); break; }
      }
    }
    for (int j = ns + nslack; j < total; ++j) allowed[j] = false;
  }

  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(total);
  for (int k = 0; k < ns; ++k) phase2(k) = p.c(col_orig[k]) * col_sign[k];
  set_objective(tb, phase2);
  simplex_iterate(tb, allowed, &unbounded);
  if (unbounded) return {Status::Unbounded, {}, 0.0};

  Eigen::VectorXd y = Eigen::VectorXd::Zero(total);
  for (int r = 0; r < nrows; ++r) {
    if (tb.basis[r] >= 0) y(tb.basis[r]) = tb.rhs(r);
  }

  Result res;
  res.status = Status::Optimal;
  res.x = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) res.x(j) = shift[j];
  for (int k = 0; k < ns; ++k) res.x(col_orig[k]) += col_sign[k] * y(k);
  res.objective = p.c.dot(res.x);
  return res;
}

}  // namespace rcp::lp
