#include "ideam/traffic_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ideam {

double idm_acceleration(double v, double approach_rate, double gap,
                        const IdmParams& p) {
  if (gap <= 0.0) return -kIdmAccelLimit;
  double a;
  if (std::isinf(gap)) {
    a = p.a_idm * (1.0 - std::pow(v / p.v0, p.delta_idm));
  } else {
    const double s_star =
        p.s0 + std::max(0.0, v * p.T + v * approach_rate /
                                           (2.0 * std::sqrt(p.a_idm * p.b_idm)));
    a = p.a_idm * (1.0 - std::pow(v / p.v0, p.delta_idm) -
                   (s_star / gap) * (s_star / gap));
  }
  return std::clamp(a, -kIdmAccelLimit, kIdmAccelLimit);
}

double LanePid::step(double e_y, double e_psi, double dt) {
  integral_ += e_y * dt;
  integral_ = std::clamp(integral_, -2.0, 2.0);
  const double e_y_dot = has_prev_ ? (e_y - prev_e_y_) / dt : 0.0;
  prev_e_y_ = e_y;
  has_prev_ = true;
  return -(gains_.k_p * e_y + gains_.k_i * integral_ + gains_.k_d * e_y_dot +
           gains_.k_psi * e_psi);
}

void LanePid::reset() {
  integral_ = 0.0;
  prev_e_y_ = 0.0;
  has_prev_ = false;
}

inline constexpr double kSteerLimit = 0.44;

double pid_steering(LanePid& pid, double e_y, double e_psi, double dt) {
  return std::clamp(pid.step(e_y, e_psi, dt), -kSteerLimit, kSteerLimit);
}

double curvature_feedforward(double kappa_lane, const ChassisParams& p) {
  return std::atan((p.l_f + p.l_r) * kappa_lane);
}

std::vector<SpawnedVehicle> spawn_scenario(const ScenarioConfig& cfg,
                                           const TrackModel& track,
                                           const ChassisParams& chassis) {
  if (cfg.vehicle_count < 0) throw std::invalid_argument("negative vehicle count");
  const double L = track.length();
  const int lanes = track.lane_count();
  // Feasibility: each lane can hold at most floor(L / gap) vehicles.
  const int capacity =
      lanes * static_cast<int>(std::floor(L / cfg.spawn_gap_min));
  if (cfg.vehicle_count > capacity)
    throw std::invalid_argument("infeasible traffic density for track length");

  Rng rng(cfg.seed);
  std::vector<SpawnedVehicle> out;
  std::vector<std::vector<double>> lane_s(static_cast<std::size_t>(lanes));

  const auto conflicts = [&](int lane, double s) {
    // Clear window around the ego start (s = 0, all lanes).
    const double d_ego = loop_delta(s, 0.0, L);
    if (d_ego > -cfg.ego_clear_behind && d_ego < cfg.ego_clear_ahead) return true;
    for (double other : lane_s[static_cast<std::size_t>(lane)]) {
      if (std::abs(loop_delta(s, other, L)) < cfg.spawn_gap_min) return true;
    }
    return false;
  };

  for (int i = 0; i < cfg.vehicle_count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 4000 && !placed; ++attempt) {
      const int lane = rng.uniform_int(0, lanes - 1);
      const double s = rng.uniform(0.0, L);
      if (conflicts(lane, s)) continue;
      lane_s[static_cast<std::size_t>(lane)].push_back(s);

      SpawnedVehicle v;
      v.idm.v0 = rng.uniform(cfg.v0_min, cfg.v0_max);
      const double speed =
          v.idm.v0 * rng.uniform(cfg.init_speed_factor_min, cfg.init_speed_factor_max);
      FrenetPose pose{s, track.lane_offset(lane), 0.0};
      double x, y, psi;
      track.frenet_to_global(pose, x, y, psi);
      v.state.x = x;
      v.state.y = y;
      v.state.psi = psi;
      v.state.v = speed;
      v.state.beta = 0.0;
      v.state.lane = lane;
      v.state.frenet = pose;
      out.push_back(v);
      placed = true;
    }
    if (!placed) throw std::invalid_argument("infeasible traffic density: spawn failed");
  }
  (void)chassis;
  return out;
}

PredictionTable predict_positions(const std::vector<double>& s,
                                  const std::vector<double>& v,
                                  int horizon_steps, double dt) {
  if (s.size() != v.size()) throw std::invalid_argument("mismatched s/v sizes");
  PredictionTable t;
  t.horizon_steps = horizon_steps;
  t.dt = dt;
  t.rows.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto& row = t.rows[i];
    row.resize(static_cast<std::size_t>(horizon_steps) + 1);
    for (int k = 0; k <= horizon_steps; ++k) {
      row[static_cast<std::size_t>(k)] = {s[i] + static_cast<double>(k) * dt * v[i],
                                          v[i]};
    }
  }
  return t;
}

}  // namespace ideam
