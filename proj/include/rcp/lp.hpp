#pragma once

#include <Eigen/Dense>
#include <limits>

// Small dense linear-program solver (two-phase primal simplex, Bland's rule).
// Problems in this codebase have a few dozen variables at most, so a dense
// tableau is simpler and more predictable than pulling in a sparse LP library.
namespace rcp::lp {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Status { Optimal, Infeasible, Unbounded };

// min c.x  s.t.  Aub*x <= bub,  Aeq*x = beq,  lo <= x <= hi
// lo/hi entries may be +-inf. Empty Aub/Aeq are fine.
struct Problem {
  Eigen::VectorXd c;
  Eigen::MatrixXd Aub;
  Eigen::VectorXd bub;
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  // All-zero problem with free variables and no rows.
  static Problem sized(int nvar, int nub, int neq);
};

struct Result {
  Status status = Status::Infeasible;
  Eigen::VectorXd x;        // meaningful only when Optimal
  double objective = 0.0;   // c.x at the solution
};

Result solve(const Problem& p);

}  // namespace rcp::lp
