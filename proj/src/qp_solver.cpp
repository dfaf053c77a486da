#include "ideam/qp_solver.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ideam {

bool QpProblem::hessian_is_psd(double shift) const {
  Eigen::SparseMatrix<double> Ps = P;
  for (Eigen::Index i = 0; i < Ps.rows(); ++i) Ps.coeffRef(i, i) += shift;
  Ps.makeCompressed();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Ps);
  if (ldlt.info() != Eigen::Success) return false;
  return (ldlt.vectorD().array() >= -1e-9).all();
}

namespace {

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

struct PolishResult {
  Eigen::VectorXd x, y;
  bool ok = false;
};

PolishResult polish_active_set(const QpProblem& p, const Eigen::VectorXd& z,
                               const Eigen::VectorXd& y) {
  const Eigen::Index n = p.num_vars();
  const Eigen::Index m = p.num_rows();
  std::vector<Eigen::Index> active;
  std::vector<double> rhs_act;
  for (Eigen::Index i = 0; i < m; ++i) {
    const bool eq = p.lower(i) == p.upper(i);
    if (eq || y(i) < -1e-10) {
      active.push_back(i);
      rhs_act.push_back(p.lower(i));
    } else if (y(i) > 1e-10) {
      active.push_back(i);
      rhs_act.push_back(p.upper(i));
    }
  }
  const auto na = static_cast<Eigen::Index>(active.size());
  const double reg = 1e-9;

  // Row-major copy of A for cheap row extraction.
  Eigen::SparseMatrix<double, Eigen::RowMajor> Ar = p.A;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(p.P.nonZeros() + 2 * p.A.nonZeros()) + 64);
  for (int kcol = 0; kcol < p.P.outerSize(); ++kcol)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.P, kcol); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value());
  for (Eigen::Index i = 0; i < n; ++i)
    trips.emplace_back(i, i, reg);
  for (Eigen::Index a = 0; a < na; ++a) {
    const Eigen::Index row = active[static_cast<std::size_t>(a)];
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Ar, row); it;
         ++it) {
      trips.emplace_back(n + a, it.col(), it.value());
      trips.emplace_back(it.col(), n + a, it.value());
    }
    trips.emplace_back(n + a, n + a, -reg);
  }
  Eigen::SparseMatrix<double> K(n + na, n + na);
  K.setFromTriplets(trips.begin(), trips.end());
  K.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(K);
  PolishResult res;
  if (lu.info() != Eigen::Success) return res;

  Eigen::VectorXd rhs(n + na);
  rhs.head(n) = -p.q;
  for (Eigen::Index a = 0; a < na; ++a)
    rhs(n + a) = rhs_act[static_cast<std::size_t>(a)];

  Eigen::VectorXd sol = lu.solve(rhs);
  // Two rounds of iterative refinement against the unregularized system.
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::VectorXd r = rhs;
    r.head(n) -= p.P * sol.head(n);
    for (Eigen::Index a = 0; a < na; ++a) {
      const Eigen::Index row = active[static_cast<std::size_t>(a)];
      double av = 0.0;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Ar, row); it;
           ++it) {
        av += it.value() * sol(it.col());
        r(it.col()) -= it.value() * sol(n + a);  // A_act' y term of stationarity
      }
      r(n + a) -= av;
    }
    sol += lu.solve(r);
  }

  res.x = sol.head(n);
  res.y = Eigen::VectorXd::Zero(m);
  for (Eigen::Index a = 0; a < na; ++a)
    res.y(active[static_cast<std::size_t>(a)]) = sol(n + a);
  res.ok = true;
  return res;
}

}  // namespace

QpSolution QpSolver::solve(const QpProblem& p) {
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index n = p.num_vars();
  const Eigen::Index m = p.num_rows();
  if (p.P.rows() != n || p.P.cols() != n || p.A.rows() != m || p.A.cols() != n ||
      p.upper.size() != m)
    throw std::invalid_argument("inconsistent QP dimensions");

  QpSolution sol;
  sol.x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
  sol.y = Eigen::VectorXd::Zero(m);
  if (p.warm_x.size() == n) sol.x = p.warm_x;
  if (p.warm_y.size() == m) sol.y = p.warm_y;

  Eigen::SparseMatrix<double> At = p.A.transpose();
  z = p.A * sol.x;
  for (Eigen::Index i = 0; i < m; ++i)
    z(i) = std::clamp(z(i), p.lower(i), p.upper(i));

  double rho_bar = settings_.rho0;
  Eigen::VectorXd rho(m), rho_inv(m);
  const auto set_rho = [&](double rb) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const bool eq = p.lower(i) == p.upper(i);
      rho(i) = eq ? rb * settings_.rho_eq_scale : rb;
      rho_inv(i) = 1.0 / rho(i);
    }
  };
  set_rho(rho_bar);

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool pattern_done = false;
  const auto refactor = [&]() {
    Eigen::SparseMatrix<double> M =
        p.P + Eigen::SparseMatrix<double>(At * rho.asDiagonal() * p.A);
    for (Eigen::Index i = 0; i < n; ++i) M.coeffRef(i, i) += settings_.sigma;
    M.makeCompressed();
    if (!pattern_done) {
      ldlt.analyzePattern(M);
      pattern_done = true;
    }
    ldlt.factorize(M);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("QP KKT factorization failed");
  };
  refactor();

  Eigen::VectorXd y_prev_check = sol.y;
  const double alpha = settings_.alpha;

  for (int iter = 1; iter <= settings_.max_iter; ++iter) {
    const Eigen::VectorXd rhs =
        settings_.sigma * sol.x - p.q + At * (rho.cwiseProduct(z) - sol.y);
    const Eigen::VectorXd x_tilde = ldlt.solve(rhs);
    const Eigen::VectorXd z_tilde = p.A * x_tilde;

    sol.x = alpha * x_tilde + (1.0 - alpha) * sol.x;
    const Eigen::VectorXd z_bar = alpha * z_tilde + (1.0 - alpha) * z;
    Eigen::VectorXd z_next = z_bar + rho_inv.cwiseProduct(sol.y);
    for (Eigen::Index i = 0; i < m; ++i)
      z_next(i) = std::clamp(z_next(i), p.lower(i), p.upper(i));
    sol.y += rho.cwiseProduct(z_bar - z_next);
    z = z_next;
    sol.iterations = iter;

    if (iter % settings_.check_interval == 0 || iter == settings_.max_iter) {
      const Eigen::VectorXd Ax = p.A * sol.x;
      const Eigen::VectorXd Px = p.P * sol.x;
      const Eigen::VectorXd Aty = At * sol.y;
      sol.prim_res = inf_norm(Ax - z);
      sol.dual_res = inf_norm(Px + p.q + Aty);
      const double sc_p = std::max(inf_norm(Ax), inf_norm(z));
      const double sc_d = std::max({inf_norm(Px), inf_norm(Aty), inf_norm(p.q)});
      const double eps_p = settings_.eps_abs + settings_.eps_rel * sc_p;
      const double eps_d = settings_.eps_abs + settings_.eps_rel * sc_d;
      if (sol.prim_res <= eps_p && sol.dual_res <= eps_d) {
        sol.status = QpStatus::Optimal;
        break;
      }

      // Primal infeasibility certificate from the dual increment.
      const Eigen::VectorXd dy = sol.y - y_prev_check;
      const double dy_norm = inf_norm(dy);
      if (dy_norm > 1e-12) {
        bool cert = inf_norm(Eigen::VectorXd(At * dy)) <= settings_.eps_pinf * dy_norm;
        double support = 0.0;
        for (Eigen::Index i = 0; i < m && cert; ++i) {
          if (dy(i) > 1e-12 * dy_norm) {
            if (std::isinf(p.upper(i))) cert = false;
            else support += p.upper(i) * dy(i);
          } else if (dy(i) < -1e-12 * dy_norm) {
            if (std::isinf(p.lower(i))) cert = false;
            else support += p.lower(i) * dy(i);
          }
        }
        if (cert && support <= -settings_.eps_pinf * dy_norm) {
          sol.status = QpStatus::PrimalInfeasible;
          break;
        }
      }
      y_prev_check = sol.y;

      if (settings_.adaptive_rho && iter < settings_.max_iter) {
        const double num = sol.prim_res / std::max(sc_p, 1e-12);
        const double den = sol.dual_res / std::max(sc_d, 1e-12);
        const double ratio = std::sqrt(num / std::max(den, 1e-16));
        if (ratio > 5.0 || ratio < 0.2) {
          rho_bar = std::clamp(rho_bar * ratio, 1e-6, 1e6);
          set_rho(rho_bar);
          refactor();
        }
      }
    }
  }

  if (sol.status == QpStatus::Optimal && settings_.polish) {
    PolishResult pol = polish_active_set(p, z, sol.y);
    if (pol.ok) {
      const Eigen::VectorXd Ax = p.A * pol.x;
      Eigen::VectorXd viol(m);
      for (Eigen::Index i = 0; i < m; ++i)
        viol(i) = std::max({p.lower(i) - Ax(i), Ax(i) - p.upper(i), 0.0});
      const double pr = inf_norm(viol);
      const double dr = inf_norm(Eigen::VectorXd(p.P * pol.x + p.q + At * pol.y));
      if (pr <= std::max(sol.prim_res, 1e-9) && dr <= std::max(sol.dual_res, 1e-9)) {
        sol.x = pol.x;
        sol.y = pol.y;
        sol.prim_res = pr;
        sol.dual_res = dr;
        sol.polished = true;
      }
    }
  }

  sol.solve_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count();
  return sol;
}

}  // namespace ideam
