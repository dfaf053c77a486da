#include "ideam/sim_config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ideam {

using nlohmann::json;

SimConfig default_sim_config() { return SimConfig{}; }

namespace {

json to_json(const SimConfig& c) {
  json j;
  j["track"] = {{"straight_length", c.track.straight_length},
                {"radius", c.track.radius},
                {"lane_width", c.track.lane_width},
                {"lane_count", c.track.lane_count},
                {"sample_spacing", c.track.sample_spacing}};
  j["chassis"] = {{"mass", c.chassis.m},
                  {"inertia_z", c.chassis.I_z},
                  {"l_f", c.chassis.l_f},
                  {"l_r", c.chassis.l_r},
                  {"length", c.chassis.length},
                  {"width", c.chassis.width},
                  {"tire",
                   {{"B_f", c.chassis.tire.B_f},
                    {"C_f", c.chassis.tire.C_f},
                    {"D_f", c.chassis.tire.D_f},
                    {"B_r", c.chassis.tire.B_r},
                    {"C_r", c.chassis.tire.C_r},
                    {"D_r", c.chassis.tire.D_r}}}};
  j["scenario"] = {{"vehicle_count", c.scenario.vehicle_count},
                   {"spawn_gap_min", c.scenario.spawn_gap_min},
                   {"ego_clear_ahead", c.scenario.ego_clear_ahead},
                   {"ego_clear_behind", c.scenario.ego_clear_behind},
                   {"v0_min", c.scenario.v0_min},
                   {"v0_max", c.scenario.v0_max},
                   {"init_speed_factor_min", c.scenario.init_speed_factor_min},
                   {"init_speed_factor_max", c.scenario.init_speed_factor_max},
                   {"duration", c.scenario.duration},
                   {"dt", c.scenario.dt}};
  j["pid"] = {{"k_p", c.pid.k_p},
              {"k_i", c.pid.k_i},
              {"k_d", c.pid.k_d},
              {"k_psi", c.pid.k_psi}};
  j["lsgm"] = {{"T_long", c.lsgm.T_long},
               {"T_short_min", c.lsgm.T_short_min},
               {"T_short_max", c.lsgm.T_short_max},
               {"extension_step", c.lsgm.extension_step},
               {"d_threshold", c.lsgm.d_threshold},
               {"min_gap", c.lsgm.min_gap}};
  j["risk"] = {{"l_diag", c.risk.l_diag},
               {"eps", c.risk.eps},
               {"n", c.risk.n},
               {"N_seg", c.risk.N_seg}};
  const PlannerConfig& p = c.planner;
  j["planner"] = {{"N", p.N},
                  {"dt", p.dt},
                  {"v_d", p.v_d},
                  {"Q", {p.Q_a, p.Q_delta}},
                  {"P", {p.P_a, p.P_delta}},
                  {"R_vx", {p.R_vx_lo, p.R_vx_hi}},
                  {"R_vy", p.R_vy},
                  {"R_w", p.R_w},
                  {"R_s", p.R_s},
                  {"R_ey", {p.R_ey_lo, p.R_ey_hi}},
                  {"R_epsi", {p.R_epsi_lo, p.R_epsi_hi}},
                  {"S_terminal", p.S_terminal},
                  {"time_increasing", p.time_increasing},
                  {"slack_penalty", p.slack_penalty},
                  {"omega_penalty", p.omega_penalty},
                  {"T_d", p.lon.T_d},
                  {"d_0", p.lon.d_0},
                  {"gamma_lon", p.lon.gamma},
                  {"d_lat", p.lat.d_lat},
                  {"gamma_lat", p.lat.gamma},
                  {"gamma1", p.dho.gamma1},
                  {"gamma2", p.dho.gamma2},
                  {"N_dho", p.dho.N_dho},
                  {"omega_lb", p.dho.omega_lb},
                  {"ellipse_a_leader", p.ellipse_a_leader},
                  {"ellipse_b_leader", p.ellipse_b_leader},
                  {"ellipse_a_follower", p.ellipse_a_follower},
                  {"ellipse_b_follower", p.ellipse_b_follower},
                  {"a_min", p.limits.a_min},
                  {"a_max", p.limits.a_max},
                  {"delta_max", p.limits.delta_max},
                  {"a_rate", p.limits.a_rate},
                  {"delta_rate", p.limits.delta_rate},
                  {"lambda_b", p.lambda_b},
                  {"v_min", p.v_min},
                  {"v_max", p.v_max},
                  {"qp",
                   {{"eps_abs", p.qp.eps_abs},
                    {"eps_rel", p.qp.eps_rel},
                    {"max_iter", p.qp.max_iter},
                    {"adaptive_rho", p.qp.adaptive_rho},
                    {"polish", p.qp.polish}}}};
  j["mobil"] = {{"politeness", c.mobil.politeness},
                {"accel_threshold", c.mobil.accel_threshold},
                {"b_safe", c.mobil.b_safe},
                {"ego_v0", c.mobil.ego_idm.v0}};
  j["ego_start_speed"] = c.ego_start_speed;
  j["target_hysteresis_steps"] = c.target_hysteresis_steps;
  return j;
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void get_pair(const json& j, const char* key, double& lo, double& hi) {
  if (j.contains(key)) {
    lo = j.at(key).at(0).get<double>();
    hi = j.at(key).at(1).get<double>();
  }
}

SimConfig from_json(const json& j) {
  SimConfig c;
  if (j.contains("track")) {
    const json& t = j["track"];
    get_if(t, "straight_length", c.track.straight_length);
    get_if(t, "radius", c.track.radius);
    get_if(t, "lane_width", c.track.lane_width);
    get_if(t, "lane_count", c.track.lane_count);
    get_if(t, "sample_spacing", c.track.sample_spacing);
  }
  if (j.contains("chassis")) {
    const json& h = j["chassis"];
    get_if(h, "mass", c.chassis.m);
    get_if(h, "inertia_z", c.chassis.I_z);
    get_if(h, "l_f", c.chassis.l_f);
    get_if(h, "l_r", c.chassis.l_r);
    get_if(h, "length", c.chassis.length);
    get_if(h, "width", c.chassis.width);
    if (h.contains("tire")) {
      const json& t = h["tire"];
      get_if(t, "B_f", c.chassis.tire.B_f);
      get_if(t, "C_f", c.chassis.tire.C_f);
      get_if(t, "D_f", c.chassis.tire.D_f);
      get_if(t, "B_r", c.chassis.tire.B_r);
      get_if(t, "C_r", c.chassis.tire.C_r);
      get_if(t, "D_r", c.chassis.tire.D_r);
    }
  }
  if (j.contains("scenario")) {
    const json& s = j["scenario"];
    get_if(s, "vehicle_count", c.scenario.vehicle_count);
    get_if(s, "spawn_gap_min", c.scenario.spawn_gap_min);
    get_if(s, "ego_clear_ahead", c.scenario.ego_clear_ahead);
    get_if(s, "ego_clear_behind", c.scenario.ego_clear_behind);
    get_if(s, "v0_min", c.scenario.v0_min);
    get_if(s, "v0_max", c.scenario.v0_max);
    get_if(s, "init_speed_factor_min", c.scenario.init_speed_factor_min);
    get_if(s, "init_speed_factor_max", c.scenario.init_speed_factor_max);
    get_if(s, "duration", c.scenario.duration);
    get_if(s, "dt", c.scenario.dt);
  }
  if (j.contains("pid")) {
    const json& p = j["pid"];
    get_if(p, "k_p", c.pid.k_p);
    get_if(p, "k_i", c.pid.k_i);
    get_if(p, "k_d", c.pid.k_d);
    get_if(p, "k_psi", c.pid.k_psi);
  }
  if (j.contains("lsgm")) {
    const json& l = j["lsgm"];
    get_if(l, "T_long", c.lsgm.T_long);
    get_if(l, "T_short_min", c.lsgm.T_short_min);
    get_if(l, "T_short_max", c.lsgm.T_short_max);
    get_if(l, "extension_step", c.lsgm.extension_step);
    get_if(l, "d_threshold", c.lsgm.d_threshold);
    get_if(l, "min_gap", c.lsgm.min_gap);
  }
  if (j.contains("risk")) {
    const json& r = j["risk"];
    get_if(r, "l_diag", c.risk.l_diag);
    get_if(r, "eps", c.risk.eps);
    get_if(r, "n", c.risk.n);
    get_if(r, "N_seg", c.risk.N_seg);
  }
  if (j.contains("planner")) {
    const json& p = j["planner"];
    PlannerConfig& pc = c.planner;
    get_if(p, "N", pc.N);
    get_if(p, "dt", pc.dt);
    get_if(p, "v_d", pc.v_d);
    if (p.contains("Q")) {
      pc.Q_a = p["Q"].at(0).get<double>();
      pc.Q_delta = p["Q"].at(1).get<double>();
    }
    if (p.contains("P")) {
      pc.P_a = p["P"].at(0).get<double>();
      pc.P_delta = p["P"].at(1).get<double>();
    }
    get_pair(p, "R_vx", pc.R_vx_lo, pc.R_vx_hi);
    get_if(p, "R_vy", pc.R_vy);
    get_if(p, "R_w", pc.R_w);
    get_if(p, "R_s", pc.R_s);
    get_pair(p, "R_ey", pc.R_ey_lo, pc.R_ey_hi);
    get_pair(p, "R_epsi", pc.R_epsi_lo, pc.R_epsi_hi);
    get_if(p, "S_terminal", pc.S_terminal);
    get_if(p, "time_increasing", pc.time_increasing);
    get_if(p, "slack_penalty", pc.slack_penalty);
    get_if(p, "omega_penalty", pc.omega_penalty);
    get_if(p, "T_d", pc.lon.T_d);
    get_if(p, "d_0", pc.lon.d_0);
    get_if(p, "gamma_lon", pc.lon.gamma);
    get_if(p, "d_lat", pc.lat.d_lat);
    get_if(p, "gamma_lat", pc.lat.gamma);
    get_if(p, "gamma1", pc.dho.gamma1);
    get_if(p, "gamma2", pc.dho.gamma2);
    get_if(p, "N_dho", pc.dho.N_dho);
    get_if(p, "omega_lb", pc.dho.omega_lb);
    get_if(p, "ellipse_a_leader", pc.ellipse_a_leader);
    get_if(p, "ellipse_b_leader", pc.ellipse_b_leader);
    get_if(p, "ellipse_a_follower", pc.ellipse_a_follower);
    get_if(p, "ellipse_b_follower", pc.ellipse_b_follower);
    get_if(p, "a_min", pc.limits.a_min);
    get_if(p, "a_max", pc.limits.a_max);
    get_if(p, "delta_max", pc.limits.delta_max);
    get_if(p, "a_rate", pc.limits.a_rate);
    get_if(p, "delta_rate", pc.limits.delta_rate);
    get_if(p, "lambda_b", pc.lambda_b);
    get_if(p, "v_min", pc.v_min);
    get_if(p, "v_max", pc.v_max);
    if (p.contains("qp")) {
      const json& q = p["qp"];
      get_if(q, "eps_abs", pc.qp.eps_abs);
      get_if(q, "eps_rel", pc.qp.eps_rel);
      get_if(q, "max_iter", pc.qp.max_iter);
      get_if(q, "adaptive_rho", pc.qp.adaptive_rho);
      get_if(q, "polish", pc.qp.polish);
    }
  }
  if (j.contains("mobil")) {
    const json& m = j["mobil"];
    get_if(m, "politeness", c.mobil.politeness);
    get_if(m, "accel_threshold", c.mobil.accel_threshold);
    get_if(m, "b_safe", c.mobil.b_safe);
    get_if(m, "ego_v0", c.mobil.ego_idm.v0);
  }
  get_if(j, "ego_start_speed", c.ego_start_speed);
  get_if(j, "target_hysteresis_steps", c.target_hysteresis_steps);

  if (c.track.lane_width <= c.chassis.width)
    throw std::invalid_argument("lane width must exceed vehicle width");
  c.planner.limits.dt = c.scenario.dt;
  c.planner.dt = c.scenario.dt;
  return c;
}

}  // namespace

std::string sim_config_to_json(const SimConfig& cfg) { return to_json(cfg).dump(2); }

SimConfig sim_config_from_json(const std::string& text) {
  return from_json(json::parse(text));
}

SimConfig load_sim_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return sim_config_from_json(ss.str());
}

void save_sim_config(const SimConfig& cfg, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write config file: " + path);
  f << sim_config_to_json(cfg) << "\n";
}

}  // namespace ideam
