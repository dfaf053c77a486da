#include "ideam/vehicle_models.hpp"

#include <cmath>
#include <stdexcept>

namespace ideam {

TireForces tire_forces(const EgoState& x, double delta_f, const ChassisParams& p) {
  TireForces out;
  if (x.v_x < kSlipSpeedFloor) return out;  // forces zeroed at crawl speeds
  out.alpha_f = delta_f - std::atan((p.l_f * x.w + x.v_y) / x.v_x);
  out.alpha_r = std::atan((p.l_r * x.w - x.v_y) / x.v_x);
  out.F_fy = 2.0 * p.tire.D_f *
             std::sin(p.tire.C_f * std::atan(p.tire.B_f * out.alpha_f));
  out.F_ry = 2.0 * p.tire.D_r *
             std::sin(p.tire.C_r * std::atan(p.tire.B_r * out.alpha_r));
  return out;
}

Eigen::Matrix<double, 6, 1> ego_derivative(const EgoState& x, const ControlInput& u,
                                           double kappa, const ChassisParams& p) {
  const double g = 1.0 - kappa * x.e_y;
  if (g <= 1e-6)
    throw std::domain_error("Frenet denominator 1 - kappa*e_y is singular");

  const TireForces tf = tire_forces(x, u.delta, p);
  const double c = std::cos(x.e_psi);
  const double sn = std::sin(x.e_psi);
  const double V = x.v_x * c - x.v_y * sn;
  const double s_dot = V / g;

  Eigen::Matrix<double, 6, 1> d;
  d(0) = u.a_x - tf.F_fy * std::sin(u.delta) / p.m + x.w * x.v_y;
  d(1) = (tf.F_fy * std::cos(u.delta) + tf.F_ry) / p.m - x.w * x.v_x;
  d(2) = (p.l_f * tf.F_fy * std::cos(u.delta) - p.l_r * tf.F_ry) / p.I_z;
  d(3) = s_dot;
  d(4) = x.v_x * sn + x.v_y * c;
  d(5) = x.w - s_dot * kappa;
  return d;
}

EgoState euler_step(const EgoState& x, const ControlInput& u, double kappa,
                    const ChassisParams& p, double dt) {
  const Eigen::Matrix<double, 6, 1> d = ego_derivative(x, u, kappa, p);
  return EgoState::from_vec(x.vec() + dt * d);
}

LinearizedModel discretize_linearize(const EgoState& op_state,
                                     const ControlInput& op_input, double kappa,
                                     const ChassisParams& p, double dt) {
  const double v_x = op_state.v_x;
  const double v_y = op_state.v_y;
  const double w = op_state.w;
  const double e_psi = op_state.e_psi;
  const double delta = op_input.delta;
  const double g = 1.0 - kappa * op_state.e_y;
  if (g <= 1e-6 || v_x < kSlipSpeedFloor)
    throw std::domain_error("singular operating point for linearization");

  Eigen::Matrix<double, 6, 6> Jx = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 2> Ju = Eigen::Matrix<double, 6, 2>::Zero();

  const TireForces tf = tire_forces(op_state, delta, p);
  // dF/dalpha for the magic formula.
  const auto force_slope = [](double B, double C, double D, double alpha) {
    return 2.0 * D * std::cos(C * std::atan(B * alpha)) * C * B /
           (1.0 + B * B * alpha * alpha);
  };
  const double G_f = force_slope(p.tire.B_f, p.tire.C_f, p.tire.D_f, tf.alpha_f);
  const double G_r = force_slope(p.tire.B_r, p.tire.C_r, p.tire.D_r, tf.alpha_r);

  const double z_f = p.l_f * w + v_y;
  const double z_r = p.l_r * w - v_y;
  const double den_f = v_x * v_x + z_f * z_f;
  const double den_r = v_x * v_x + z_r * z_r;
  // Slip-angle partials.
  const double daf_dvx = z_f / den_f;
  const double daf_dvy = -v_x / den_f;
  const double daf_dw = -p.l_f * v_x / den_f;
  const double dar_dvx = -z_r / den_r;
  const double dar_dvy = -v_x / den_r;
  const double dar_dw = p.l_r * v_x / den_r;

  const double cd = std::cos(delta);
  const double sd = std::sin(delta);

  // v_x dot
  Jx(0, 0) = -(sd / p.m) * G_f * daf_dvx;
  Jx(0, 1) = -(sd / p.m) * G_f * daf_dvy + w;
  Jx(0, 2) = -(sd / p.m) * G_f * daf_dw + v_y;
  Ju(0, 0) = 1.0;
  Ju(0, 1) = -(G_f * sd + tf.F_fy * cd) / p.m;

  // v_y dot
  Jx(1, 0) = (cd * G_f * daf_dvx + G_r * dar_dvx) / p.m - w;
  Jx(1, 1) = (cd * G_f * daf_dvy + G_r * dar_dvy) / p.m;
  Jx(1, 2) = (cd * G_f * daf_dw + G_r * dar_dw) / p.m - v_x;
  Ju(1, 1) = (G_f * cd - tf.F_fy * sd) / p.m;

  // w dot
  Jx(2, 0) = (p.l_f * cd * G_f * daf_dvx - p.l_r * G_r * dar_dvx) / p.I_z;
  Jx(2, 1) = (p.l_f * cd * G_f * daf_dvy - p.l_r * G_r * dar_dvy) / p.I_z;
  Jx(2, 2) = (p.l_f * cd * G_f * daf_dw - p.l_r * G_r * dar_dw) / p.I_z;
  Ju(2, 1) = p.l_f * (G_f * cd - tf.F_fy * sd) / p.I_z;

  // s dot = V / g with V = v_x cos - v_y sin; kappa treated as frozen.
  const double c = std::cos(e_psi);
  const double sn = std::sin(e_psi);
  const double V = v_x * c - v_y * sn;
  Jx(3, 0) = c / g;
  Jx(3, 1) = -sn / g;
  Jx(3, 4) = V * kappa / (g * g);
  Jx(3, 5) = (-v_x * sn - v_y * c) / g;

  // e_y dot
  Jx(4, 0) = sn;
  Jx(4, 1) = c;
  Jx(4, 5) = V;

  // e_psi dot = w - kappa * s_dot
  Jx(5, 0) = -kappa * Jx(3, 0);
  Jx(5, 1) = -kappa * Jx(3, 1);
  Jx(5, 2) = 1.0;
  Jx(5, 4) = -kappa * Jx(3, 4);
  Jx(5, 5) = -kappa * Jx(3, 5);

  LinearizedModel m;
  m.dt = dt;
  m.A = Eigen::Matrix<double, 6, 6>::Identity() + dt * Jx;
  m.B = dt * Ju;
  const Eigen::Matrix<double, 6, 1> f = ego_derivative(op_state, op_input, kappa, p);
  Eigen::Matrix<double, 2, 1> u_op;
  u_op << op_input.a_x, op_input.delta;
  m.C = dt * (f - Jx * op_state.vec() - Ju * u_op);
  return m;
}

SurroundingState kinematic_step(const SurroundingState& x, double a, double delta_f,
                                const ChassisParams& p, double dt) {
  SurroundingState n = x;
  const double beta = std::atan(p.l_r / (p.l_f + p.l_r) * std::tan(delta_f));
  n.x = x.x + dt * x.v * std::cos(x.psi + beta);
  n.y = x.y + dt * x.v * std::sin(x.psi + beta);
  n.psi = wrap_angle(x.psi + dt * x.v / p.l_r * std::sin(beta));
  n.v = std::max(0.0, x.v + dt * a);
  n.beta = beta;
  return n;
}

}  // namespace ideam
