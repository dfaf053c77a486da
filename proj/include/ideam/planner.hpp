#pragma once

#include <array>
#include <optional>
#include <vector>

#include "ideam/constraints.hpp"
#include "ideam/lsgm.hpp"
#include "ideam/qp_solver.hpp"
#include "ideam/track.hpp"
#include "ideam/traffic_sim.hpp"
#include "ideam/vehicle_models.hpp"

namespace ideam {

enum class ConstraintState { LaneKeeping, LaneProbing, LaneChanging };
const char* constraint_state_name(ConstraintState s);

struct PlannerConfig {
  int N = 30;
  double dt = 0.1;
  double v_d = 18.0;

  // Input, input-rate, tracking and terminal weights.
  double Q_a = 0.1;
  double Q_delta = 8.0;
  double P_a = 0.0;
  double P_delta = 8.0;
  double R_vx_lo = 0.2, R_vx_hi = 0.35;
  double R_vy = 4.0;
  double R_w = 4.0;
  double R_s = 0.0;
  double R_ey_lo = 6.0, R_ey_hi = 10.0;
  double R_epsi_lo = 7.0, R_epsi_hi = 24.0;
  double S_terminal = 60.0;
  bool time_increasing = true;
  double slack_penalty = 1e4;
  double omega_penalty = 10.0;

  LonCbfParams lon{};
  LatCbfParams lat{};
  DhocbfParams dho{};
  double ellipse_a_leader = 1.5;
  double ellipse_b_leader = 2.2;
  double ellipse_a_follower = 1.5;
  double ellipse_b_follower = 2.3;

  ActuatorLimits limits{};
  double lambda_b = 0.2;
  double v_min = 0.3;
  double v_max = 30.0;

  QpSettings qp{};
};

// Lane change requires a spatial advantage of half a vehicle length over
// the desired group's follower; until then the planner probes.
ConstraintState select_state(int current_node, int target_node, double ego_s,
                             double desired_follower_s, double vehicle_length);

// Per-step tracking reference: desired speed, centered on the target lane.
std::vector<Eigen::Matrix<double, 6, 1>> build_reference(const PlannerConfig& cfg,
                                                         double target_lane_offset = 0.0);

// Linear ramp from lo at k = 0 to hi at k = N-1.
std::vector<double> time_increasing_weights(double lo, double hi, int N);

struct SceneSnapshot {
  EgoState ego{};  // s unwrapped; all surrounding s in the same frame
  int current_node = 2;
  std::array<VehicleGroup, kNodeCount> groups{};
  std::vector<TrafficView> traffic;
  std::vector<double> traffic_e_y;
  PredictionTable predictions;
};

struct AssembledQp {
  QpProblem qp;
  VarLayout layout{};
  std::vector<LinearRow> rows;
  std::vector<EgoState> lin_states;      // linearization trajectory x_0..x_N
  std::vector<ControlInput> lin_inputs;  // u_0..u_{N-1}
  int lateral_neighbor_count = 0;
};

int count_rows(const std::vector<LinearRow>& rows, RowFamily family);

struct PlanResult {
  ControlInput input{};
  std::vector<EgoState> traj;        // optimized states x_0..x_N
  std::vector<ControlInput> inputs;  // optimized inputs u_0..u_{N-1}
  ConstraintState state = ConstraintState::LaneKeeping;
  QpStatus status = QpStatus::MaxIterations;
  bool fallback = false;
  int iterations = 0;
  double solve_time_ms = 0.0;
  double max_slack = 0.0;       // largest slack variable at the solution
  double min_cbf_margin = 0.0;  // min residual over lon/lat rows (incl. slack)
  int row_count = 0;
  int var_count = 0;
  Eigen::VectorXd primal;  // for warm starting
  Eigen::VectorXd dual;
};

// Previous-trajectory based linearization seed. With no previous result the
// current state is rolled out at constant speed.
struct LinSeed {
  std::vector<EgoState> states;
  std::vector<ControlInput> inputs;
};
LinSeed make_lin_seed(const SceneSnapshot& scene, const PlanResult* prev,
                      const TrackModel& track, const ChassisParams& chassis,
                      const PlannerConfig& cfg);

AssembledQp assemble_qp(ConstraintState state, const SceneSnapshot& scene,
                        int target_node, const LinSeed& seed,
                        const ControlInput& prev_input, const TrackModel& track,
                        const ChassisParams& chassis, const PlannerConfig& cfg);

PlanResult plan_step(const SceneSnapshot& scene, int target_node,
                     ConstraintState state, const PlanResult* prev,
                     const ControlInput& prev_input, const TrackModel& track,
                     const ChassisParams& chassis, const PlannerConfig& cfg,
                     QpSolver& solver);

}  // namespace ideam
