#include "ideam/planner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ideam {

const char* constraint_state_name(ConstraintState s) {
  switch (s) {
    case ConstraintState::LaneKeeping: return "LK";
    case ConstraintState::LaneProbing: return "LP";
    case ConstraintState::LaneChanging: return "LC";
  }
  return "?";
}

ConstraintState select_state(int current_node, int target_node, double ego_s,
                             double desired_follower_s, double vehicle_length) {
  if (target_node == current_node) return ConstraintState::LaneKeeping;
  if (ego_s - desired_follower_s >= 0.5 * vehicle_length)
    return ConstraintState::LaneChanging;
  return ConstraintState::LaneProbing;
}

std::vector<Eigen::Matrix<double, 6, 1>> build_reference(const PlannerConfig& cfg,
                                                         double target_lane_offset) {
  std::vector<Eigen::Matrix<double, 6, 1>> ref(static_cast<std::size_t>(cfg.N) + 1);
  Eigen::Matrix<double, 6, 1> r = Eigen::Matrix<double, 6, 1>::Zero();
  r(kVx) = cfg.v_d;
  r(kEy) = target_lane_offset;
  for (auto& v : ref) v = r;
  return ref;
}

std::vector<double> time_increasing_weights(double lo, double hi, int N) {
  if (lo > hi) throw std::invalid_argument("weight range must be ordered");
  std::vector<double> w(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k)
    w[static_cast<std::size_t>(k)] =
        (N > 1) ? lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(N - 1)
                : lo;
  return w;
}

int count_rows(const std::vector<LinearRow>& rows, RowFamily family) {
  int n = 0;
  for (const auto& r : rows) n += (r.tag.family == family) ? 1 : 0;
  return n;
}

LinSeed make_lin_seed(const SceneSnapshot& scene, const PlanResult* prev,
                      const TrackModel& track, const ChassisParams& chassis,
                      const PlannerConfig& cfg) {
  LinSeed seed;
  const auto N = static_cast<std::size_t>(cfg.N);
  seed.states.resize(N + 1);
  seed.inputs.resize(N);
  if (prev != nullptr && prev->traj.size() == N + 1 && prev->inputs.size() == N &&
      !prev->fallback) {
    // Shift the previous optimum: drop its first step, roll the tail forward.
    seed.states[0] = scene.ego;
    for (std::size_t k = 1; k < N; ++k) seed.states[k] = prev->traj[k + 1];
    for (std::size_t k = 0; k + 1 < N; ++k) seed.inputs[k] = prev->inputs[k + 1];
    seed.inputs[N - 1] = prev->inputs[N - 1];
    const EgoState& last = seed.states[N - 1];
    seed.states[N] = euler_step(last, seed.inputs[N - 1],
                                track.curvature_at(last.s), chassis, cfg.dt);
  } else {
    // Constant-velocity rollout of the current state.
    seed.states[0] = scene.ego;
    for (std::size_t k = 0; k < N; ++k) {
      seed.inputs[k] = {0.0, 0.0};
      EgoState next = euler_step(seed.states[k], seed.inputs[k],
                                 track.curvature_at(seed.states[k].s), chassis, cfg.dt);
      next.v_x = std::max(next.v_x, cfg.v_min);
      seed.states[k + 1] = next;
    }
  }
  return seed;
}

namespace {

struct CostBuilder {
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd q;

  explicit CostBuilder(int n) : q(Eigen::VectorXd::Zero(n)) {}

  // Adds w * (x_i - r)^2 to the objective.
  void quad(int i, double w, double r = 0.0) {
    if (w == 0.0) return;
    trips.emplace_back(i, i, 2.0 * w);
    q(i) += -2.0 * w * r;
  }
  // Adds w * (x_i - x_j)^2.
  void quad_diff(int i, int j, double w) {
    if (w == 0.0) return;
    trips.emplace_back(i, i, 2.0 * w);
    trips.emplace_back(j, j, 2.0 * w);
    trips.emplace_back(i, j, -2.0 * w);
    trips.emplace_back(j, i, -2.0 * w);
  }
  // Adds w * (x_i - c)^2 for constant c.
  void quad_offset(int i, double w, double c) { quad(i, w, c); }
};

double clamp_virtual(double s_i, double ego_s) {
  return std::clamp(s_i, ego_s - 2000.0, ego_s + 2000.0);
}

std::vector<double> member_prediction(const GroupMember& m, const PredictionTable& pred,
                                      int N, double ego_s) {
  std::vector<double> s(static_cast<std::size_t>(N) + 1);
  for (int k = 0; k <= N; ++k)
    s[static_cast<std::size_t>(k)] =
        clamp_virtual(predicted_member_s(m, pred, k), ego_s);
  return s;
}

}  // namespace

AssembledQp assemble_qp(ConstraintState state, const SceneSnapshot& scene,
                        int target_node, const LinSeed& seed,
                        const ControlInput& prev_input, const TrackModel& track,
                        const ChassisParams& chassis, const PlannerConfig& cfg) {
  AssembledQp out;
  const int N = cfg.N;
  out.lin_states = seed.states;
  out.lin_inputs = seed.inputs;

  const VehicleGroup& current = scene.groups[static_cast<std::size_t>(scene.current_node)];
  const VehicleGroup& target = scene.groups[static_cast<std::size_t>(target_node)];
  const int ego_lane = node_lane(scene.current_node);
  const int target_lane = node_lane(target_node);
  const double boundary_center =
      (state == ConstraintState::LaneChanging) ? track.lane_offset(target_lane)
                                               : track.lane_offset(ego_lane);

  // Vehicles already covered by dedicated longitudinal/ellipse families do
  // not also get lateral rows.
  std::vector<int> dedicated;
  dedicated.push_back(current.leader.index);
  dedicated.push_back(current.follower.index);
  if (state == ConstraintState::LaneChanging) {
    dedicated.push_back(target.leader.index);
    dedicated.push_back(target.follower.index);
  }

  // Lateral neighbors: adjacent-lane vehicles that enter the ROI at least once.
  std::vector<LateralNeighbor> lat_neighbors;
  std::vector<double> ego_prev_s(static_cast<std::size_t>(N) + 1);
  for (int k = 0; k <= N; ++k)
    ego_prev_s[static_cast<std::size_t>(k)] = seed.states[static_cast<std::size_t>(k)].s;
  for (std::size_t i = 0; i < scene.traffic.size(); ++i) {
    if (std::abs(scene.traffic[i].lane - ego_lane) != 1) continue;
    if (std::find(dedicated.begin(), dedicated.end(), static_cast<int>(i)) !=
        dedicated.end())
      continue;
    LateralNeighbor nb;
    nb.vehicle_id = static_cast<int>(i);
    nb.e_y = scene.traffic_e_y[i];
    nb.left_of_ego = nb.e_y > scene.ego.e_y;
    nb.s.resize(static_cast<std::size_t>(N) + 1);
    bool any = false;
    for (int k = 0; k <= N; ++k) {
      nb.s[static_cast<std::size_t>(k)] =
          scene.predictions.rows[i][static_cast<std::size_t>(k)].s;
      if (k < N &&
          std::abs(nb.s[static_cast<std::size_t>(k)] -
                   ego_prev_s[static_cast<std::size_t>(k)]) <= cfg.lat.roi_half_length)
        any = true;
    }
    if (any) lat_neighbors.push_back(std::move(nb));
  }
  out.lateral_neighbor_count = static_cast<int>(lat_neighbors.size());

  // Slack layout: longitudinal families first, then lateral, then boundary.
  struct LonFamily {
    LonRole role;
    GroupMember member;
  };
  std::vector<LonFamily> lon_families;
  if (state == ConstraintState::LaneKeeping)
    lon_families.push_back({LonRole::CurrentLeader, current.leader});
  lon_families.push_back({LonRole::CurrentFollower, current.follower});
  if (state == ConstraintState::LaneChanging)
    lon_families.push_back({LonRole::DesiredLeader, target.leader});

  // DHOCBF obstacles: current leader in LP/LC, desired follower in LC. The
  // ellipse sits on the obstacle's near edge and constrains the ego's near
  // edge, so tangency still leaves the bodies separated.
  struct EllipseFamily {
    GroupMember member;
    double a, b;
    double obstacle_edge;  // rear edge of leaders, front edge of followers
    double ego_edge;       // ego front toward leaders, ego rear toward followers
  };
  std::vector<EllipseFamily> ellipse_families;
  if (state != ConstraintState::LaneKeeping && current.leader.index >= 0)
    ellipse_families.push_back({current.leader, cfg.ellipse_a_leader,
                                cfg.ellipse_b_leader, -0.5 * chassis.length,
                                +0.5 * chassis.length});
  if (state == ConstraintState::LaneChanging && target.follower.index >= 0)
    ellipse_families.push_back({target.follower, cfg.ellipse_a_follower,
                                cfg.ellipse_b_follower, +0.5 * chassis.length,
                                -0.5 * chassis.length});

  VarLayout layout;
  layout.N = N;
  layout.slack_count =
      static_cast<int>(lon_families.size() + lat_neighbors.size()) + 1;
  const int omega_per_obstacle = 2 * cfg.dho.N_dho - 1;
  layout.omega_count = omega_per_obstacle * static_cast<int>(ellipse_families.size());
  const int n = layout.total();

  // ---- Cost ----
  CostBuilder cost(n);
  for (int k = 0; k < N; ++k) {
    cost.quad(layout.u_index(k, 0), cfg.Q_a);
    cost.quad(layout.u_index(k, 1), cfg.Q_delta);
  }
  const double dt2 = cfg.dt * cfg.dt;
  // Input-rate cost, including the step from the previously applied input.
  cost.quad_offset(layout.u_index(0, 0), cfg.P_a / dt2, prev_input.a_x);
  cost.quad_offset(layout.u_index(0, 1), cfg.P_delta / dt2, prev_input.delta);
  for (int k = 0; k + 1 < N; ++k) {
    cost.quad_diff(layout.u_index(k + 1, 0), layout.u_index(k, 0), cfg.P_a / dt2);
    cost.quad_diff(layout.u_index(k + 1, 1), layout.u_index(k, 1), cfg.P_delta / dt2);
  }

  const auto ramp = [&](double lo, double hi) {
    if (!cfg.time_increasing) {
      const double mid = 0.5 * (lo + hi);
      return std::vector<double>(static_cast<std::size_t>(N), mid);
    }
    return time_increasing_weights(lo, hi, N);
  };
  const auto w_vx = ramp(cfg.R_vx_lo, cfg.R_vx_hi);
  const auto w_ey = ramp(cfg.R_ey_lo, cfg.R_ey_hi);
  const auto w_epsi = ramp(cfg.R_epsi_lo, cfg.R_epsi_hi);
  // Track the lane the boundary corridor is centered on: the target lane
  // while changing, the current lane otherwise.
  const auto ref = build_reference(cfg, boundary_center);
  for (int k = 1; k < N; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    cost.quad(layout.x_index(k, kVx), w_vx[ku], ref[ku](kVx));
    cost.quad(layout.x_index(k, kVy), cfg.R_vy, 0.0);
    cost.quad(layout.x_index(k, kW), cfg.R_w, 0.0);
    cost.quad(layout.x_index(k, kS), cfg.R_s, 0.0);
    cost.quad(layout.x_index(k, kEy), w_ey[ku], ref[ku](kEy));
    cost.quad(layout.x_index(k, kEpsi), w_epsi[ku], 0.0);
  }
  cost.quad(layout.x_index(N, kEpsi), cfg.S_terminal, 0.0);
  for (int i = 0; i < layout.slack_count; ++i)
    cost.quad(layout.slack_index(i), cfg.slack_penalty);
  for (int i = 0; i < layout.omega_count; ++i)
    cost.quad(layout.omega_index(i), cfg.omega_penalty, 1.0);

  // ---- Rows ----
  std::vector<LinearRow>& rows = out.rows;

  // Initial state and dynamics along the linearization trajectory.
  for (int j = 0; j < 6; ++j) {
    LinearRow r;
    r.tag = {RowFamily::InitialState, -1, 0};
    r.coeffs.emplace_back(layout.x_index(0, j), 1.0);
    r.lower = r.upper = scene.ego.vec()(j);
    rows.push_back(std::move(r));
  }
  for (int k = 0; k < N; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const EgoState& xs = seed.states[ku];
    const LinearizedModel lin = discretize_linearize(
        xs, seed.inputs[ku], track.curvature_at(xs.s), chassis, cfg.dt);
    for (int j = 0; j < 6; ++j) {
      LinearRow r;
      r.tag = {RowFamily::Dynamics, -1, k};
      r.coeffs.emplace_back(layout.x_index(k + 1, j), 1.0);
      for (int c = 0; c < 6; ++c)
        if (lin.A(j, c) != 0.0)
          r.coeffs.emplace_back(layout.x_index(k, c), -lin.A(j, c));
      for (int c = 0; c < 2; ++c)
        if (lin.B(j, c) != 0.0)
          r.coeffs.emplace_back(layout.u_index(k, c), -lin.B(j, c));
      r.lower = r.upper = lin.C(j);
      rows.push_back(std::move(r));
    }
  }

  int slack_idx = 0;
  for (const auto& fam : lon_families) {
    const auto s_pred =
        member_prediction(fam.member, scene.predictions, N, scene.ego.s);
    auto fam_rows = lon_dcbf_rows(fam.role, s_pred, cfg.lon, layout, slack_idx,
                                  fam.member.index);
    rows.insert(rows.end(), fam_rows.begin(), fam_rows.end());
    ++slack_idx;
  }

  std::vector<int> lat_slacks;
  for (std::size_t j = 0; j < lat_neighbors.size(); ++j) lat_slacks.push_back(slack_idx++);
  {
    auto lat_rows =
        lat_dcbf_rows(lat_neighbors, ego_prev_s, cfg.lat, layout, lat_slacks);
    rows.insert(rows.end(), lat_rows.begin(), lat_rows.end());
  }

  int omega_base = 0;
  for (const auto& fam : ellipse_families) {
    std::vector<TangentCoeffs> tangents(static_cast<std::size_t>(cfg.dho.N_dho) + 1);
    for (int k = 0; k <= cfg.dho.N_dho; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const Vec2 center{
          predicted_member_s(fam.member, scene.predictions, k) + fam.obstacle_edge,
          scene.traffic_e_y[static_cast<std::size_t>(fam.member.index)]};
      const Vec2 query{seed.states[ku].s + fam.ego_edge, seed.states[ku].e_y};
      const Vec2 bp = ellipse_project(query, center, fam.a, fam.b);
      TangentCoeffs t = tangent_coeffs(bp, center, fam.a, fam.b);
      t.C += t.A * fam.ego_edge;  // fold the ego edge offset into the constant
      tangents[ku] = t;
    }
    const double psi0_x0 = tangents[0].value(scene.ego.s, scene.ego.e_y);
    const double psi0_x1 = tangents[1].value(seed.states[1].s, seed.states[1].e_y);
    auto fam_rows = dhocbf_rows(tangents, psi0_x0, psi0_x1, cfg.dho, layout,
                                omega_base, fam.member.index);
    rows.insert(rows.end(), fam_rows.begin(), fam_rows.end());
    omega_base += omega_per_obstacle;
  }

  const double hard_limit =
      (static_cast<double>(track.lane_count()) / 2.0) * track.lane_width() -
      0.5 * chassis.width;
  {
    auto b_rows =
        boundary_rows(boundary_center, cfg.lambda_b, hard_limit, layout, slack_idx);
    rows.insert(rows.end(), b_rows.begin(), b_rows.end());
  }
  const int boundary_slack = slack_idx++;
  (void)boundary_slack;

  for (int k = 1; k <= N; ++k) {
    LinearRow r;
    r.tag = {RowFamily::SpeedBox, -1, k};
    r.coeffs.emplace_back(layout.x_index(k, kVx), 1.0);
    r.lower = cfg.v_min;
    r.upper = cfg.v_max;
    rows.push_back(std::move(r));
  }

  {
    auto a_rows = actuator_rows(cfg.limits, layout, prev_input.a_x, prev_input.delta);
    rows.insert(rows.end(), a_rows.begin(), a_rows.end());
  }

  for (int i = 0; i < layout.slack_count; ++i) {
    LinearRow r;
    r.tag = {RowFamily::SlackBound, -1, i};
    r.coeffs.emplace_back(layout.slack_index(i), 1.0);
    r.lower = 0.0;
    rows.push_back(std::move(r));
  }
  for (int i = 0; i < layout.omega_count; ++i) {
    LinearRow r;
    r.tag = {RowFamily::OmegaBound, -1, i};
    r.coeffs.emplace_back(layout.omega_index(i), 1.0);
    r.lower = cfg.dho.omega_lb;
    rows.push_back(std::move(r));
  }

  // ---- Pack ----
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.qp.q = cost.q;
  out.qp.P.resize(n, n);
  out.qp.P.setFromTriplets(cost.trips.begin(), cost.trips.end());
  out.qp.P.makeCompressed();
  std::vector<Eigen::Triplet<double>> a_trips;
  out.qp.lower.resize(m);
  out.qp.upper.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    for (const auto& [idx, v] : rows[iu].coeffs) a_trips.emplace_back(i, idx, v);
    out.qp.lower(i) = rows[iu].lower;
    out.qp.upper(i) = rows[iu].upper;
  }
  out.qp.A.resize(m, n);
  out.qp.A.setFromTriplets(a_trips.begin(), a_trips.end());
  out.qp.A.makeCompressed();
  out.layout = layout;
  return out;
}

PlanResult plan_step(const SceneSnapshot& scene, int target_node,
                     ConstraintState state, const PlanResult* prev,
                     const ControlInput& prev_input, const TrackModel& track,
                     const ChassisParams& chassis, const PlannerConfig& cfg,
                     QpSolver& solver) {
  const LinSeed seed = make_lin_seed(scene, prev, track, chassis, cfg);
  AssembledQp asm_qp =
      assemble_qp(state, scene, target_node, seed, prev_input, track, chassis, cfg);

  // Warm start from the previous solution when the problem shape matches.
  if (prev != nullptr && prev->primal.size() == asm_qp.qp.num_vars() &&
      prev->dual.size() == asm_qp.qp.num_rows() && !prev->fallback) {
    asm_qp.qp.warm_x = prev->primal;
    asm_qp.qp.warm_y = prev->dual;
    const VarLayout& L = asm_qp.layout;
    for (int k = 0; k <= L.N; ++k) {
      const auto src = static_cast<std::size_t>(std::min(k + 1, L.N));
      for (int j = 0; j < 6; ++j)
        asm_qp.qp.warm_x(L.x_index(k, j)) = prev->traj[src].vec()(j);
    }
    for (int k = 0; k < L.N; ++k) {
      const auto src = static_cast<std::size_t>(std::min(k + 1, L.N - 1));
      asm_qp.qp.warm_x(L.u_index(k, 0)) = prev->inputs[src].a_x;
      asm_qp.qp.warm_x(L.u_index(k, 1)) = prev->inputs[src].delta;
    }
  }

  const QpSolution sol = solver.solve(asm_qp.qp);

  PlanResult res;
  res.state = state;
  res.status = sol.status;
  res.iterations = sol.iterations;
  res.solve_time_ms = sol.solve_time_ms;
  res.row_count = static_cast<int>(asm_qp.qp.num_rows());
  res.var_count = static_cast<int>(asm_qp.qp.num_vars());

  if (sol.status == QpStatus::Optimal) {
    const VarLayout& L = asm_qp.layout;
    res.traj.resize(static_cast<std::size_t>(L.N) + 1);
    res.inputs.resize(static_cast<std::size_t>(L.N));
    for (int k = 0; k <= L.N; ++k) {
      Eigen::Matrix<double, 6, 1> v;
      for (int j = 0; j < 6; ++j) v(j) = sol.x(L.x_index(k, j));
      res.traj[static_cast<std::size_t>(k)] = EgoState::from_vec(v);
    }
    for (int k = 0; k < L.N; ++k)
      res.inputs[static_cast<std::size_t>(k)] = {sol.x(L.u_index(k, 0)),
                                                 sol.x(L.u_index(k, 1))};
    res.input = res.inputs[0];
    res.input.a_x = std::clamp(res.input.a_x, cfg.limits.a_min, cfg.limits.a_max);
    res.input.delta =
        std::clamp(res.input.delta, -cfg.limits.delta_max, cfg.limits.delta_max);
    for (int i = 0; i < L.slack_count; ++i)
      res.max_slack = std::max(res.max_slack, sol.x(L.slack_index(i)));
    double margin = kInf;
    const Eigen::VectorXd ax = asm_qp.qp.A * sol.x;
    for (std::size_t i = 0; i < asm_qp.rows.size(); ++i) {
      const RowFamily f = asm_qp.rows[i].tag.family;
      if (f == RowFamily::LonLeader || f == RowFamily::LonFollower ||
          f == RowFamily::LonDesiredLeader || f == RowFamily::Lateral)
        margin = std::min(margin, ax(static_cast<Eigen::Index>(i)) -
                                      asm_qp.rows[i].lower);
    }
    res.min_cbf_margin = std::isfinite(margin) ? margin : 0.0;
    res.primal = sol.x;
    res.dual = sol.y;
  } else {
    // Degrade safely: brake hard, bleed off the steering command.
    res.fallback = true;
    res.input = {cfg.limits.a_min, 0.5 * prev_input.delta};
    res.traj.resize(static_cast<std::size_t>(cfg.N) + 1);
    res.inputs.assign(static_cast<std::size_t>(cfg.N), res.input);
    res.traj[0] = scene.ego;
    for (int k = 0; k < cfg.N; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      EgoState next =
          euler_step(res.traj[ku], ControlInput{std::max(cfg.limits.a_min,
                                                         (cfg.v_min - res.traj[ku].v_x) /
                                                             cfg.dt),
                                                res.input.delta},
                     track.curvature_at(res.traj[ku].s), chassis, cfg.dt);
      next.v_x = std::max(next.v_x, cfg.v_min);
      res.traj[ku + 1] = next;
    }
  }
  return res;
}

}  // namespace ideam
