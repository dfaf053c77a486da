#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <limits>

namespace ideam {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class QpStatus { Optimal, MaxIterations, PrimalInfeasible };

// Convex QP: minimize 0.5 x'Px + q'x subject to lower <= Ax <= upper.
// Equality rows use lower == upper; one-sided rows use +-inf.
struct QpProblem {
  Eigen::SparseMatrix<double> P;
  Eigen::VectorXd q;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::VectorXd warm_x;  // empty = cold start
  Eigen::VectorXd warm_y;

  Eigen::Index num_vars() const { return q.size(); }
  Eigen::Index num_rows() const { return lower.size(); }
  // Cholesky-with-shift probe of the Hessian.
  bool hessian_is_psd(double shift = 1e-9) const;
};

struct QpSettings {
  double eps_abs = 1e-4;
  double eps_rel = 1e-4;
  int max_iter = 4000;
  double sigma = 1e-6;
  double alpha = 1.6;
  double rho0 = 0.1;
  double rho_eq_scale = 1e3;
  bool adaptive_rho = true;
  int check_interval = 25;
  bool polish = true;
  double eps_pinf = 1e-5;
};

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  QpStatus status = QpStatus::MaxIterations;
  double prim_res = kInf;
  double dual_res = kInf;
  int iterations = 0;
  double solve_time_ms = 0.0;
  bool polished = false;
};

// Operator-splitting (ADMM) solver with residual-balanced penalty updates;
// the KKT factorization is reused across iterations and rebuilt only when
// the penalty changes. A solver instance owns its workspace and is not
// shareable across threads.
class QpSolver {
 public:
  explicit QpSolver(QpSettings settings = {}) : settings_(settings) {}

  QpSolution solve(const QpProblem& p);

  const QpSettings& settings() const { return settings_; }
  QpSettings& settings() { return settings_; }

 private:
  QpSettings settings_;
};

}  // namespace ideam
