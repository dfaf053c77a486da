#include "ideam/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace ideam {

const char* policy_name(Policy p) {
  switch (p) {
    case Policy::IDEAM: return "ideam";
    case Policy::NoProbingIDEAM: return "noprobing";
    case Policy::MOBIL: return "mobil";
  }
  return "?";
}

bool parse_policy(const std::string& name, Policy& out) {
  if (name == "ideam") out = Policy::IDEAM;
  else if (name == "noprobing" || name == "no-probing") out = Policy::NoProbingIDEAM;
  else if (name == "mobil") out = Policy::MOBIL;
  else return false;
  return true;
}

namespace {

std::array<Vec2, 4> obb_corners(const Obb& o) {
  const double c = std::cos(o.heading);
  const double s = std::sin(o.heading);
  std::array<Vec2, 4> out;
  const double hl = o.half_length, hw = o.half_width;
  const double lx[4] = {hl, hl, -hl, -hl};
  const double ly[4] = {hw, -hw, -hw, hw};
  for (int i = 0; i < 4; ++i)
    out[static_cast<std::size_t>(i)] = {o.center.x + c * lx[i] - s * ly[i],
                                        o.center.y + s * lx[i] + c * ly[i]};
  return out;
}

double seg_seg_distance(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
  const double dx1 = p2.x - p1.x, dy1 = p2.y - p1.y;
  const double dx2 = q2.x - q1.x, dy2 = q2.y - q1.y;
  const double rx = p1.x - q1.x, ry = p1.y - q1.y;
  const double a = dx1 * dx1 + dy1 * dy1;
  const double e = dx2 * dx2 + dy2 * dy2;
  const double f = dx2 * rx + dy2 * ry;
  double s = 0.0, t = 0.0;
  if (a <= 1e-15 && e <= 1e-15) {
    s = t = 0.0;
  } else if (a <= 1e-15) {
    t = clamp01(f / e);
  } else {
    const double c = dx1 * rx + dy1 * ry;
    if (e <= 1e-15) {
      s = clamp01(-c / a);
    } else {
      const double b = dx1 * dx2 + dy1 * dy2;
      const double denom = a * e - b * b;
      s = denom > 1e-15 ? clamp01((b * f - c * e) / denom) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = clamp01(-c / a);
      } else if (t > 1.0) {
        t = 1.0;
        s = clamp01((b - c) / a);
      }
    }
  }
  const double cx = p1.x + s * dx1 - (q1.x + t * dx2);
  const double cy = p1.y + s * dy1 - (q1.y + t * dy2);
  return std::sqrt(cx * cx + cy * cy);
}

}  // namespace

bool obb_overlap(const Obb& a, const Obb& b) {
  const auto ca = obb_corners(a);
  const auto cb = obb_corners(b);
  const double axes[4][2] = {
      {std::cos(a.heading), std::sin(a.heading)},
      {-std::sin(a.heading), std::cos(a.heading)},
      {std::cos(b.heading), std::sin(b.heading)},
      {-std::sin(b.heading), std::cos(b.heading)},
  };
  for (const auto& ax : axes) {
    double amin = kInf, amax = -kInf, bmin = kInf, bmax = -kInf;
    for (const auto& p : ca) {
      const double v = p.x * ax[0] + p.y * ax[1];
      amin = std::min(amin, v);
      amax = std::max(amax, v);
    }
    for (const auto& p : cb) {
      const double v = p.x * ax[0] + p.y * ax[1];
      bmin = std::min(bmin, v);
      bmax = std::max(bmax, v);
    }
    if (amax < bmin || bmax < amin) return false;
  }
  return true;
}

double obb_distance(const Obb& a, const Obb& b) {
  if (obb_overlap(a, b)) return 0.0;
  const auto ca = obb_corners(a);
  const auto cb = obb_corners(b);
  double best = kInf;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      best = std::min(best, seg_seg_distance(ca[static_cast<std::size_t>(i)],
                                             ca[static_cast<std::size_t>((i + 1) % 4)],
                                             cb[static_cast<std::size_t>(j)],
                                             cb[static_cast<std::size_t>((j + 1) % 4)]));
  return best;
}

CollisionCheck collision_check(const Obb& ego, const std::vector<Obb>& others) {
  CollisionCheck out;
  for (std::size_t i = 0; i < others.size(); ++i) {
    const double d = obb_distance(ego, others[i]);
    if (d < out.min_distance) {
      out.min_distance = d;
      out.nearest_vehicle = static_cast<int>(i);
    }
    if (d <= 0.0) out.collided = true;
  }
  return out;
}

namespace {

struct LaneMate {
  bool found = false;
  double gap = kInf;     // bumper to bumper
  double v = 0.0;
};

LaneMate nearest_ahead(double s_self, int lane, const std::vector<TrafficView>& traffic,
                       double vehicle_length, int skip_index = -1) {
  LaneMate out;
  double best = kInf;
  for (std::size_t i = 0; i < traffic.size(); ++i) {
    if (static_cast<int>(i) == skip_index || traffic[i].lane != lane) continue;
    const double d = traffic[i].s - s_self;
    if (d <= 1e-9 || d >= best) continue;
    best = d;
    out.found = true;
    out.gap = d - vehicle_length;
    out.v = traffic[i].v;
  }
  return out;
}

LaneMate nearest_behind(double s_self, int lane, const std::vector<TrafficView>& traffic,
                        double vehicle_length, int skip_index = -1) {
  LaneMate out;
  double best = kInf;
  for (std::size_t i = 0; i < traffic.size(); ++i) {
    if (static_cast<int>(i) == skip_index || traffic[i].lane != lane) continue;
    const double d = s_self - traffic[i].s;
    if (d <= 1e-9 || d >= best) continue;
    best = d;
    out.found = true;
    out.gap = d - vehicle_length;
    out.v = traffic[i].v;
  }
  return out;
}

}  // namespace

int mobil_decide(double ego_s, double ego_v, int ego_lane,
                 const std::vector<TrafficView>& traffic,
                 const std::vector<IdmParams>& idm, double vehicle_length,
                 const MobilParams& p) {
  const auto idm_of = [&](const LaneMate& leader, double v,
                          const IdmParams& params) {
    if (!leader.found) return idm_acceleration(v, 0.0, kInf, params);
    return idm_acceleration(v, v - leader.v, leader.gap, params);
  };

  // Follower index helpers need vehicle identity, so scan manually.
  const auto follower_index = [&](double s_ref, int lane) {
    int best = -1;
    double best_d = kInf;
    for (std::size_t i = 0; i < traffic.size(); ++i) {
      if (traffic[i].lane != lane) continue;
      const double d = s_ref - traffic[i].s;
      if (d <= 1e-9 || d >= best_d) continue;
      best_d = d;
      best = static_cast<int>(i);
    }
    return best;
  };

  const LaneMate cur_leader = nearest_ahead(ego_s, ego_lane, traffic, vehicle_length);
  const double a_ego = idm_of(cur_leader, ego_v, p.ego_idm);

  int best_lane = ego_lane;
  double best_gain = p.accel_threshold;
  for (int lane : {ego_lane - 1, ego_lane + 1}) {
    if (lane < 0 || lane > 2) continue;

    const LaneMate new_leader = nearest_ahead(ego_s, lane, traffic, vehicle_length);
    const int nf = follower_index(ego_s, lane);
    // Physical room in the target lane.
    if (new_leader.found && new_leader.gap <= 0.5) continue;
    if (nf >= 0 && (ego_s - traffic[static_cast<std::size_t>(nf)].s) - vehicle_length <= 0.5)
      continue;

    // Safety: the new follower must not be forced to brake beyond b_safe.
    double nf_gain = 0.0;
    if (nf >= 0) {
      const auto nfu = static_cast<std::size_t>(nf);
      const TrafficView& f = traffic[nfu];
      const LaneMate f_leader_old = nearest_ahead(f.s, lane, traffic, vehicle_length, nf);
      const double a_nf_old = idm_of(f_leader_old, f.v, idm[nfu]);
      const double gap_to_ego = (ego_s - f.s) - vehicle_length;
      const double a_nf_new =
          idm_acceleration(f.v, f.v - ego_v, gap_to_ego, idm[nfu]);
      if (a_nf_new < -p.b_safe) continue;
      nf_gain = a_nf_new - a_nf_old;
    }

    // Old follower in the current lane is relieved when the ego leaves.
    double of_gain = 0.0;
    const int of = follower_index(ego_s, ego_lane);
    if (of >= 0) {
      const auto ofu = static_cast<std::size_t>(of);
      const TrafficView& f = traffic[ofu];
      const double gap_to_ego = (ego_s - f.s) - vehicle_length;
      const double a_of_old = idm_acceleration(f.v, f.v - ego_v, gap_to_ego, idm[ofu]);
      const LaneMate f_leader_new = nearest_ahead(f.s, ego_lane, traffic, vehicle_length, of);
      const double a_of_new = idm_of(f_leader_new, f.v, idm[ofu]);
      of_gain = a_of_new - a_of_old;
    }

    const double a_ego_new = idm_of(new_leader, ego_v, p.ego_idm);
    const double gain = (a_ego_new - a_ego) + p.politeness * (nf_gain + of_gain);
    if (gain > best_gain) {
      best_gain = gain;
      best_lane = lane;
    }
  }
  return best_lane;
}

namespace {

struct TrafficVehicle {
  SurroundingState state{};
  IdmParams idm{};
  LanePid pid;
};

Obb vehicle_obb(double x, double y, double psi, const ChassisParams& ch) {
  return {{x, y}, psi, 0.5 * ch.length, 0.5 * ch.width};
}

}  // namespace

TrackLogData run_track(std::uint64_t seed, const SimConfig& cfg, Policy policy) {
  const TrackModel track = TrackModel::build(cfg.track);
  ScenarioConfig sc = cfg.scenario;
  sc.seed = seed;
  const auto spawned = spawn_scenario(sc, track, cfg.chassis);
  std::vector<TrafficVehicle> vehicles;
  vehicles.reserve(spawned.size());
  for (const auto& s : spawned) vehicles.push_back({s.state, s.idm, LanePid(cfg.pid)});

  PlannerConfig pcfg = cfg.planner;
  if (policy == Policy::MOBIL) pcfg.time_increasing = false;

  const double dt = cfg.scenario.dt;
  const int steps = static_cast<int>(std::llround(cfg.scenario.duration / dt));
  const double L = track.length();
  const int horizon =
      std::max({cfg.lsgm.T_long, pcfg.N + 1, pcfg.dho.N_dho + 1});

  TrackLogData log;
  log.seed = seed;
  log.policy = policy;
  log.dt = dt;
  log.steps.reserve(static_cast<std::size_t>(steps) + 1);

  EgoState ego{cfg.ego_start_speed, 0.0, 0.0, 0.0, 0.0, 0.0};
  QpSolver solver(pcfg.qp);
  PlanResult prev;
  bool has_prev = false;
  ControlInput prev_input{0.0, 0.0};

  int adopted_target = node_index(1, 1);
  int pending_target = -1;
  int pending_count = 0;
  int mobil_target_lane = -1;

  std::vector<IdmParams> idm_params;
  for (const auto& v : vehicles) idm_params.push_back(v.idm);

  for (int step = 0; step <= steps; ++step) {
    const double ego_s_mod = wrap_s(ego.s, L);
    const int ego_lane = track.lane_of(ego.e_y);
    const int current_node = node_index(ego_lane, 1);

    // Scene snapshot with surrounding s unwrapped around the ego.
    SceneSnapshot scene;
    scene.ego = ego;
    scene.current_node = current_node;
    scene.traffic.resize(vehicles.size());
    scene.traffic_e_y.resize(vehicles.size());
    std::vector<double> pred_s(vehicles.size()), pred_v(vehicles.size());
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
      const auto& v = vehicles[i];
      scene.traffic[i] = {ego.s + loop_delta(v.state.frenet.s, ego_s_mod, L),
                          v.state.v, v.state.lane};
      scene.traffic_e_y[i] = v.state.frenet.e_y;
      pred_s[i] = scene.traffic[i].s;
      pred_v[i] = v.state.v;
    }
    scene.predictions = predict_positions(pred_s, pred_v, horizon, dt);
    scene.groups = build_groups(ego.s, ego.v_x, scene.traffic);

    // Decision layer.
    const auto t_dec0 = std::chrono::steady_clock::now();
    if (policy == Policy::MOBIL) {
      const bool completed = mobil_target_lane < 0 || ego_lane == mobil_target_lane;
      const bool executing_lc =
          !completed && select_state(current_node, node_index(mobil_target_lane, 1),
                                     ego.s,
                                     scene.groups[static_cast<std::size_t>(node_index(
                                                      mobil_target_lane, 1))]
                                         .follower.s,
                                     cfg.chassis.length) == ConstraintState::LaneChanging;
      if (!executing_lc) {
        const int lane = mobil_decide(ego.s, ego.v_x, ego_lane, scene.traffic,
                                      idm_params, cfg.chassis.length, cfg.mobil);
        mobil_target_lane = (lane == ego_lane) ? -1 : lane;
      }
      adopted_target = (mobil_target_lane < 0) ? current_node
                                               : node_index(mobil_target_lane, 1);
    } else {
      const LsgmResult dec =
          lsgm_decide(scene.groups, default_group_graph(), current_node,
                      scene.predictions, cfg.lsgm, cfg.risk);
      const int raw = dec.target;
      if (raw == adopted_target) {
        pending_target = -1;
        pending_count = 0;
      } else if (raw == pending_target) {
        if (++pending_count >= cfg.target_hysteresis_steps) {
          adopted_target = raw;
          pending_target = -1;
          pending_count = 0;
        }
      } else {
        pending_target = raw;
        pending_count = 1;
      }
      if (node_lane(adopted_target) == ego_lane) adopted_target = current_node;
    }
    const double decision_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                  t_dec0)
            .count();

    ConstraintState state = select_state(
        current_node, adopted_target, ego.s,
        scene.groups[static_cast<std::size_t>(adopted_target)].follower.s,
        cfg.chassis.length);
    int plan_target = adopted_target;
    if (state == ConstraintState::LaneProbing &&
        (policy == Policy::NoProbingIDEAM || policy == Policy::MOBIL)) {
      state = ConstraintState::LaneKeeping;  // hold the target without probing
      plan_target = current_node;
    }

    PlanResult pr = plan_step(scene, plan_target, state, has_prev ? &prev : nullptr,
                              prev_input, track, cfg.chassis, pcfg, solver);

    // Collision / clearance at the current (pre-step) poses.
    double gx, gy, gpsi;
    track.frenet_to_global({ego_s_mod, ego.e_y, ego.e_psi}, gx, gy, gpsi);
    const Obb ego_box = vehicle_obb(gx, gy, gpsi, cfg.chassis);
    std::vector<Obb> boxes;
    boxes.reserve(vehicles.size());
    for (const auto& v : vehicles)
      boxes.push_back(vehicle_obb(v.state.x, v.state.y, v.state.psi, cfg.chassis));
    const CollisionCheck cc = collision_check(ego_box, boxes);

    StepRecord rec;
    rec.t = static_cast<double>(step) * dt;
    rec.ego = ego;
    rec.input = pr.input;
    rec.state = state;
    rec.target_node = adopted_target;
    rec.lane = ego_lane;
    rec.min_distance = cc.min_distance;
    rec.fallback = pr.fallback;
    rec.solve_ms = pr.solve_time_ms;
    rec.decision_ms = decision_ms;
    rec.qp_iterations = pr.iterations;
    rec.max_slack = pr.max_slack;
    rec.cbf_margin = pr.min_cbf_margin;
    rec.traffic.reserve(vehicles.size());
    for (const auto& v : vehicles) rec.traffic.push_back(v.state);
    log.steps.push_back(std::move(rec));

    if (cc.collided) {
      log.collided = true;
      log.collision_step = step;
      break;
    }
    if (step == steps) break;

    // Advance the ego with the nonlinear model; keep v_x above the slip floor.
    ControlInput applied = pr.input;
    applied.a_x = std::max(applied.a_x, (0.15 - ego.v_x) / dt);
    ego = euler_step(ego, applied, track.curvature_at(ego.s), cfg.chassis, dt);
    ego.e_psi = wrap_angle(ego.e_psi);
    prev = pr;
    has_prev = true;
    prev_input = applied;

    // Advance traffic: IDM along the lane, PID + curvature feedforward across.
    std::vector<double> acc(vehicles.size()), steer(vehicles.size());
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
      const auto& v = vehicles[i];
      double gap = kInf, v_lead = 0.0;
      bool found = false;
      for (std::size_t j = 0; j < vehicles.size(); ++j) {
        if (j == i || vehicles[j].state.lane != v.state.lane) continue;
        const double d = wrap_s(vehicles[j].state.frenet.s - v.state.frenet.s, L);
        if (d <= 1e-9) continue;
        if (d - cfg.chassis.length < gap) {
          gap = d - cfg.chassis.length;
          v_lead = vehicles[j].state.v;
          found = true;
        }
      }
      if (ego_lane == v.state.lane) {
        const double d = wrap_s(ego_s_mod - v.state.frenet.s, L);
        if (d > 1e-9 && d - cfg.chassis.length < gap) {
          gap = d - cfg.chassis.length;
          v_lead = ego.v_x;
          found = true;
        }
      }
      acc[i] = found ? idm_acceleration(v.state.v, v.state.v - v_lead, gap, v.idm)
                     : idm_acceleration(v.state.v, 0.0, kInf, v.idm);
      const double lane_offset = track.lane_offset(v.state.lane);
      const double e_lane = v.state.frenet.e_y - lane_offset;
      const double ff = curvature_feedforward(
          track.lane_curvature(v.state.frenet.s, v.state.lane), cfg.chassis);
      steer[i] = std::clamp(
          pid_steering(vehicles[i].pid, e_lane, v.state.frenet.e_psi, dt) + ff, -0.44,
          0.44);
    }
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
      auto& v = vehicles[i];
      v.state = kinematic_step(v.state, acc[i], steer[i], cfg.chassis, dt);
      const int lane_keep = v.state.lane;
      v.state.frenet = track.global_to_frenet(v.state.x, v.state.y, v.state.psi);
      v.state.lane = lane_keep;  // surrounding vehicles do not change lanes
    }
  }
  return log;
}

int count_lane_changes(const TrackLogData& log) {
  if (log.steps.empty()) return 0;
  const int stable_needed = std::max(1, static_cast<int>(std::llround(1.0 / log.dt)));
  int count = 0;
  int stable_lane = log.steps.front().lane;
  const auto n = static_cast<int>(log.steps.size());
  for (int t = 1; t < n; ++t) {
    const int lane = log.steps[static_cast<std::size_t>(t)].lane;
    if (lane == stable_lane) continue;
    bool stable = true;
    for (int k = t; k < std::min(n, t + stable_needed); ++k)
      if (log.steps[static_cast<std::size_t>(k)].lane != lane) {
        stable = false;
        break;
      }
    if (stable) {
      ++count;
      stable_lane = lane;
    }
  }
  return count;
}

MetricsSummary compute_metrics(const std::vector<TrackLogData>& logs) {
  MetricsSummary m;
  m.tracks = static_cast<int>(logs.size());
  if (logs.empty()) return m;

  double sum_p20 = 0.0, sum_p40 = 0.0;
  double sum_v = 0.0, sum_acc = 0.0, sum_jerk = 0.0;
  std::size_t n_v = 0, n_jerk = 0;
  double sum_min_so = 0.0;
  std::size_t n_so_tracks = 0;
  double sum_lc = 0.0;
  std::vector<double> solve_times;
  double sum_decision = 0.0;
  std::size_t slack_exceed = 0;
  m.min_so = kInf;
  m.min_cbf_margin = kInf;
  m.has_40s = true;

  for (const auto& log : logs) {
    if (log.steps.empty()) continue;
    const double s0 = log.steps.front().ego.s;
    const auto at_time = [&](double t_query) {
      const auto idx = static_cast<std::size_t>(
          std::min<long long>(std::llround(t_query / log.dt),
                              static_cast<long long>(log.steps.size()) - 1));
      return log.steps[idx].ego.s - s0;
    };
    sum_p20 += at_time(20.0);
    sum_p40 += at_time(40.0);
    if (log.steps.back().t < 40.0 - 1e-9 && !log.collided) m.has_40s = false;
    m.max_progress = std::max(m.max_progress, log.steps.back().ego.s - s0);

    double track_min_so = kInf;
    for (std::size_t i = 0; i < log.steps.size(); ++i) {
      const auto& st = log.steps[i];
      sum_v += st.ego.v_x;
      ++n_v;
      m.max_velocity = std::max(m.max_velocity, st.ego.v_x);
      sum_acc += std::abs(st.input.a_x);
      m.max_acc = std::max(m.max_acc, std::abs(st.input.a_x));
      if (i > 0) {
        sum_jerk +=
            std::abs(st.input.a_x - log.steps[i - 1].input.a_x) / log.dt;
        ++n_jerk;
      }
      track_min_so = std::min(track_min_so, st.min_distance);
      solve_times.push_back(st.solve_ms);
      sum_decision += st.decision_ms;
      if (st.max_slack > 0.1) ++slack_exceed;
      m.min_cbf_margin = std::min(m.min_cbf_margin, st.cbf_margin);
    }
    if (std::isfinite(track_min_so)) {
      sum_min_so += track_min_so;
      ++n_so_tracks;
      m.min_so = std::min(m.min_so, track_min_so);
    }
    sum_lc += count_lane_changes(log);
    m.max_lane_changes =
        std::max(m.max_lane_changes, static_cast<double>(count_lane_changes(log)));
    if (log.collided) ++m.collisions;
  }

  const double nt = static_cast<double>(logs.size());
  m.progress_20s = sum_p20 / nt;
  m.progress_40s = sum_p40 / nt;
  m.avg_velocity = n_v ? sum_v / static_cast<double>(n_v) : 0.0;
  m.avg_acc = n_v ? sum_acc / static_cast<double>(n_v) : 0.0;
  m.avg_jerk = n_jerk ? sum_jerk / static_cast<double>(n_jerk) : 0.0;
  m.avg_min_so = n_so_tracks ? sum_min_so / static_cast<double>(n_so_tracks) : 0.0;
  if (!std::isfinite(m.min_so)) m.min_so = 0.0;
  if (!std::isfinite(m.min_cbf_margin)) m.min_cbf_margin = 0.0;
  m.avg_lane_changes = sum_lc / nt;
  if (!solve_times.empty()) {
    m.mean_solve_ms =
        std::accumulate(solve_times.begin(), solve_times.end(), 0.0) /
        static_cast<double>(solve_times.size());
    std::vector<double> sorted = solve_times;
    std::sort(sorted.begin(), sorted.end());
    m.median_solve_ms = sorted[sorted.size() / 2];
    m.mean_decision_ms = sum_decision / static_cast<double>(solve_times.size());
    m.slack_exceed_fraction =
        static_cast<double>(slack_exceed) / static_cast<double>(solve_times.size());
  }
  return m;
}

SuiteResult run_suite(int n_tracks, std::uint64_t base_seed, const SimConfig& cfg,
                      const std::vector<Policy>& policies, int threads) {
  if (n_tracks < 1) throw std::invalid_argument("suite needs at least one track");
  SuiteResult out;
  out.policies = policies;
  out.logs.assign(policies.size(), std::vector<TrackLogData>(
                                       static_cast<std::size_t>(n_tracks)));

  struct Task {
    std::size_t policy_idx;
    int track_idx;
  };
  std::vector<Task> tasks;
  for (std::size_t p = 0; p < policies.size(); ++p)
    for (int i = 0; i < n_tracks; ++i) tasks.push_back({p, i});

  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    while (true) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= tasks.size()) return;
      const Task& t = tasks[idx];
      out.logs[t.policy_idx][static_cast<std::size_t>(t.track_idx)] = run_track(
          base_seed + static_cast<std::uint64_t>(t.track_idx), cfg,
          policies[t.policy_idx]);
    }
  };
  int n_threads = threads > 0 ? threads
                              : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  n_threads = std::min<int>(n_threads, static_cast<int>(tasks.size()));
  std::vector<std::thread> pool;
  for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  for (auto& policy_logs : out.logs) out.summaries.push_back(compute_metrics(policy_logs));
  return out;
}

void write_log_csv(const TrackLogData& log, std::ostream& os) {
  const std::size_t nveh = log.steps.empty() ? 0 : log.steps.front().traffic.size();
  char buf[64];
  os << "# ideam-log v1 seed=" << log.seed << " policy=" << policy_name(log.policy)
     << " dt=" << log.dt << " collided=" << (log.collided ? 1 : 0)
     << " collision_step=" << log.collision_step << " vehicles=" << nveh << "\n";
  os << "t,v_x,v_y,w,s,e_y,e_psi,a_x,delta,state,target,lane,min_dist,fallback,"
        "solve_ms,decision_ms,qp_iters,max_slack,cbf_margin";
  for (std::size_t j = 0; j < nveh; ++j)
    os << ",veh" << j << "_x,veh" << j << "_y,veh" << j << "_psi,veh" << j
       << "_v,veh" << j << "_lane";
  os << "\n";
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };
  for (const auto& st : log.steps) {
    os << num(st.t) << ',' << num(st.ego.v_x) << ',' << num(st.ego.v_y) << ','
       << num(st.ego.w) << ',' << num(st.ego.s) << ',' << num(st.ego.e_y) << ','
       << num(st.ego.e_psi) << ',' << num(st.input.a_x) << ',' << num(st.input.delta)
       << ',' << static_cast<int>(st.state) << ',' << st.target_node << ','
       << st.lane << ',' << num(st.min_distance) << ',' << (st.fallback ? 1 : 0)
       << ',' << num(st.solve_ms) << ',' << num(st.decision_ms) << ','
       << st.qp_iterations << ',' << num(st.max_slack) << ',' << num(st.cbf_margin);
    for (const auto& v : st.traffic)
      os << ',' << num(v.x) << ',' << num(v.y) << ',' << num(v.psi) << ','
         << num(v.v) << ',' << v.lane;
    os << "\n";
  }
}

TrackLogData read_log_csv(std::istream& is) {
  TrackLogData log;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ideam-log v1", 0) != 0)
    throw std::runtime_error("not an ideam log CSV");
  std::size_t nveh = 0;
  {
    std::istringstream hs(line.substr(14));
    std::string tok;
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      if (key == "seed") log.seed = std::stoull(val);
      else if (key == "policy") parse_policy(val, log.policy);
      else if (key == "dt") log.dt = std::stod(val);
      else if (key == "collided") log.collided = val == "1";
      else if (key == "collision_step") log.collision_step = std::stoi(val);
      else if (key == "vehicles") nveh = std::stoul(val);
    }
  }
  std::getline(is, line);  // column header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() < 19 + nveh * 5) throw std::runtime_error("short CSV row");
    StepRecord st;
    int c = 0;
    st.t = std::stod(cells[c++]);
    st.ego.v_x = std::stod(cells[c++]);
    st.ego.v_y = std::stod(cells[c++]);
    st.ego.w = std::stod(cells[c++]);
    st.ego.s = std::stod(cells[c++]);
    st.ego.e_y = std::stod(cells[c++]);
    st.ego.e_psi = std::stod(cells[c++]);
    st.input.a_x = std::stod(cells[c++]);
    st.input.delta = std::stod(cells[c++]);
    st.state = static_cast<ConstraintState>(std::stoi(cells[c++]));
    st.target_node = std::stoi(cells[c++]);
    st.lane = std::stoi(cells[c++]);
    st.min_distance = std::stod(cells[c++]);
    st.fallback = cells[c++] == "1";
    st.solve_ms = std::stod(cells[c++]);
    st.decision_ms = std::stod(cells[c++]);
    st.qp_iterations = std::stoi(cells[c++]);
    st.max_slack = std::stod(cells[c++]);
    st.cbf_margin = std::stod(cells[c++]);
    for (std::size_t j = 0; j < nveh; ++j) {
      SurroundingState v;
      v.x = std::stod(cells[c++]);
      v.y = std::stod(cells[c++]);
      v.psi = std::stod(cells[c++]);
      v.v = std::stod(cells[c++]);
      v.lane = std::stoi(cells[c++]);
      st.traffic.push_back(v);
    }
    log.steps.push_back(std::move(st));
  }
  return log;
}

}  // namespace ideam
