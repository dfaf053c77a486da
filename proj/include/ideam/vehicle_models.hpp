#pragma once

#include <Eigen/Dense>

#include "ideam/track.hpp"

namespace ideam {

// State ordering used everywhere: (v_x, v_y, w, s, e_y, e_psi).
struct EgoState {
  double v_x{};
  double v_y{};
  double w{};
  double s{};
  double e_y{};
  double e_psi{};

  Eigen::Matrix<double, 6, 1> vec() const {
    Eigen::Matrix<double, 6, 1> v;
    v << v_x, v_y, w, s, e_y, e_psi;
    return v;
  }
  static EgoState from_vec(const Eigen::Matrix<double, 6, 1>& v) {
    return {v(0), v(1), v(2), v(3), v(4), v(5)};
  }
};

struct ControlInput {
  double a_x{};
  double delta{};
};

struct PacejkaCoeffs {
  double B_f = 10.0;
  double C_f = 1.9;
  double D_f = 4562.8272;  // 0.9 * m * g * l_r / (l_f + l_r)
  double B_r = 10.0;
  double C_r = 1.9;
  double D_r = 6844.2408;  // 0.9 * m * g * l_f / (l_f + l_r)
};

struct ChassisParams {
  double m = 1292.0;
  double I_z = 1343.1;
  double l_f = 1.56;
  double l_r = 1.04;
  double length = 3.5;
  double width = 1.8;
  PacejkaCoeffs tire{};
};

// Discrete-time affine model x_{k+1} = A x_k + B u_k + C around an
// operating point; exact at the expansion point by construction.
struct LinearizedModel {
  Eigen::Matrix<double, 6, 6> A;
  Eigen::Matrix<double, 6, 2> B;
  Eigen::Matrix<double, 6, 1> C;
  double dt{};
};

struct TireForces {
  double F_fy{};
  double F_ry{};
  double alpha_f{};
  double alpha_r{};
};

// Below this longitudinal speed the slip angles are undefined; lateral
// forces are zeroed instead of evaluating the arctangents.
inline constexpr double kSlipSpeedFloor = 0.1;

TireForces tire_forces(const EgoState& x, double delta_f, const ChassisParams& p);

Eigen::Matrix<double, 6, 1> ego_derivative(const EgoState& x, const ControlInput& u,
                                           double kappa, const ChassisParams& p);

EgoState euler_step(const EgoState& x, const ControlInput& u, double kappa,
                    const ChassisParams& p, double dt);

LinearizedModel discretize_linearize(const EgoState& op_state,
                                     const ControlInput& op_input, double kappa,
                                     const ChassisParams& p, double dt);

// Kinematic bicycle used for surrounding vehicles (global frame).
struct SurroundingState {
  double x{};
  double y{};
  double psi{};
  double v{};
  double beta{};
  int lane{};
  FrenetPose frenet{};
};

SurroundingState kinematic_step(const SurroundingState& x, double a, double delta_f,
                                const ChassisParams& p, double dt);

}  // namespace ideam
