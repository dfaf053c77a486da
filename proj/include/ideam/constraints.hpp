#pragma once

#include <utility>
#include <vector>

#include "ideam/qp_solver.hpp"
#include "ideam/track.hpp"

namespace ideam {

// Stacked decision-variable layout over the horizon: states x_0..x_N, then
// inputs u_0..u_{N-1}, then slack variables, then DHOCBF relaxations.
struct VarLayout {
  int N = 30;
  int slack_count = 0;
  int omega_count = 0;

  int n_states() const { return 6 * (N + 1); }
  int n_inputs() const { return 2 * N; }
  int x_index(int k, int j) const { return 6 * k + j; }
  int u_index(int k, int j) const { return n_states() + 2 * k + j; }
  int slack_index(int i) const { return n_states() + n_inputs() + i; }
  int omega_index(int i) const { return n_states() + n_inputs() + slack_count + i; }
  int total() const { return n_states() + n_inputs() + slack_count + omega_count; }
};

// State vector component offsets within one step.
inline constexpr int kVx = 0;
inline constexpr int kVy = 1;
inline constexpr int kW = 2;
inline constexpr int kS = 3;
inline constexpr int kEy = 4;
inline constexpr int kEpsi = 5;

enum class RowFamily {
  Dynamics,
  InitialState,
  LonLeader,
  LonFollower,
  LonDesiredLeader,
  Lateral,
  DhocbfFirst,
  DhocbfSecond,
  BoundarySoft,
  BoundaryHard,
  InputBox,
  InputRate,
  SpeedBox,
  SlackBound,
  OmegaBound,
};

struct RowTag {
  RowFamily family{};
  int vehicle = -1;
  int k = -1;
};

// One linear constraint lower <= a'x <= upper over the stacked variables.
struct LinearRow {
  std::vector<std::pair<int, double>> coeffs;
  double lower = -kInf;
  double upper = kInf;
  RowTag tag{};
};

struct LonCbfParams {
  double T_d = 0.3;
  double d_0 = 5.0;
  double gamma = 0.3;
};

enum class LonRole { CurrentLeader, CurrentFollower, DesiredLeader };

// Barrier value with |s - s_i| resolved by role so rows stay linear.
double h_lon(double ego_s, double ego_vx, double s_i, LonRole role,
             const LonCbfParams& p);

// DCBF rows h(k+1) - h(k) >= -gamma h(k) - slack for k = 0..N-1 against a
// predicted surrounding position sequence s_i (length >= N+1).
std::vector<LinearRow> lon_dcbf_rows(LonRole role, const std::vector<double>& s_i,
                                     const LonCbfParams& p, const VarLayout& layout,
                                     int slack_index, int vehicle_id);

struct LatCbfParams {
  double d_lat = 2.1;
  double gamma = 0.3;
  double vehicle_width = 1.8;
  double roi_half_length = 2.0 * 3.7;  // 2 * l_diag
};

struct LateralNeighbor {
  int vehicle_id = -1;
  double e_y = 0.0;               // frozen lateral position
  std::vector<double> s;          // predicted positions, length >= N+1
  bool left_of_ego = false;       // resolves the absolute value
};

// Rows are emitted only for steps where the neighbor is inside the ego's
// region of interest (closed interval) along the previous trajectory.
std::vector<LinearRow> lat_dcbf_rows(const std::vector<LateralNeighbor>& neighbors,
                                     const std::vector<double>& ego_prev_s,
                                     const LatCbfParams& p, const VarLayout& layout,
                                     const std::vector<int>& slack_indices);

struct EllipseObstacle {
  double a = 1.5;  // longitudinal semi-axis
  double b = 2.2;  // lateral semi-axis
  std::vector<Vec2> centers;  // (s_o, e_yo) per step
};

// Nearest boundary point of the ellipse centered at (s_o, e_yo); solved via
// the scalar secular equation in the Lagrange multiplier. Throws when the
// query coincides with the center.
Vec2 ellipse_project(const Vec2& query, const Vec2& center, double a, double b);

struct TangentCoeffs {
  double A{};
  double B{};
  double C{};
  double value(double s, double e_y) const { return A * s + B * e_y + C; }
};

TangentCoeffs tangent_coeffs(const Vec2& boundary_point, const Vec2& center,
                             double a, double b);

struct DhocbfParams {
  double gamma1 = 0.3;
  double gamma2 = 0.3;
  int N_dho = 20;
  double omega_lb = 0.0;
};

// Linearized high-order barrier rows for one obstacle: first-order rows for
// k = 0..N_dho-1 and second-order rows for k = 0..N_dho-2. tangents[k] is the
// half-plane at step k (length >= N_dho + 1); psi0_x0 / psi0_x1 are the
// prior-trajectory barrier values at steps 0 and 1. omega variables are
// indexed omega_base..omega_base + 2*N_dho - 2.
std::vector<LinearRow> dhocbf_rows(const std::vector<TangentCoeffs>& tangents,
                                   double psi0_x0, double psi0_x1,
                                   const DhocbfParams& p, const VarLayout& layout,
                                   int omega_base, int vehicle_id);

// Soft corridor of half-width lambda_b around the target lane offset plus a
// hard outer-boundary band, for k = 1..N.
std::vector<LinearRow> boundary_rows(double target_offset, double lambda_b,
                                     double hard_limit, const VarLayout& layout,
                                     int slack_index);

struct ActuatorLimits {
  double a_min = -3.0;
  double a_max = 3.0;
  double delta_max = 0.44;
  double a_rate = 15.0;      // |da/dt|
  double delta_rate = 0.5;   // |ddelta/dt|
  double dt = 0.1;
};

// Box rows on every input and first-difference rate rows, including the
// rate from the previously applied input to u_0.
std::vector<LinearRow> actuator_rows(const ActuatorLimits& lim, const VarLayout& layout,
                                     double prev_a, double prev_delta);

}  // namespace ideam
