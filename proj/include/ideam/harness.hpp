#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ideam/lsgm.hpp"
#include "ideam/planner.hpp"
#include "ideam/track.hpp"
#include "ideam/traffic_sim.hpp"
#include "ideam/vehicle_models.hpp"

namespace ideam {

enum class Policy { IDEAM, NoProbingIDEAM, MOBIL };
const char* policy_name(Policy p);
bool parse_policy(const std::string& name, Policy& out);

// Oriented bounding box in the global frame.
struct Obb {
  Vec2 center{};
  double heading{};
  double half_length{};
  double half_width{};
};

bool obb_overlap(const Obb& a, const Obb& b);
// Euclidean body-to-body distance; zero when overlapping.
double obb_distance(const Obb& a, const Obb& b);

struct CollisionCheck {
  bool collided = false;
  double min_distance = kInf;  // S_o
  int nearest_vehicle = -1;
};
CollisionCheck collision_check(const Obb& ego, const std::vector<Obb>& others);

struct MobilParams {
  double politeness = 0.2;
  double accel_threshold = 0.1;
  double b_safe = 3.0;
  IdmParams ego_idm{18.0, 1.5, 2.0, 1.5, 2.0, 4.0};
};

// Classic incentive/safety lane-change criterion; returns the chosen lane
// (possibly the current one). Traffic s must be unwrapped around the ego.
int mobil_decide(double ego_s, double ego_v, int ego_lane,
                 const std::vector<TrafficView>& traffic,
                 const std::vector<IdmParams>& idm, double vehicle_length,
                 const MobilParams& p);

struct SimConfig {
  TrackConfig track{};
  ChassisParams chassis{};
  ScenarioConfig scenario{};
  PidGains pid{};
  LsgmParams lsgm{};
  RiskParams risk{};
  PlannerConfig planner{};
  MobilParams mobil{};
  double ego_start_speed = 10.0;
  int target_hysteresis_steps = 2;
};

struct StepRecord {
  double t{};
  EgoState ego{};          // s unwrapped: total progress since start
  ControlInput input{};
  ConstraintState state{};
  int target_node{};
  int lane{};
  double min_distance{};   // S_o at this step
  bool fallback{};
  double solve_ms{};
  double decision_ms{};
  int qp_iterations{};
  double max_slack{};
  double cbf_margin{};
  std::vector<SurroundingState> traffic;
};

struct TrackLogData {
  std::uint64_t seed{};
  Policy policy{};
  double dt{};
  bool collided = false;
  int collision_step = -1;
  std::vector<StepRecord> steps;
};

struct MetricsSummary {
  int tracks = 0;
  double progress_20s = 0.0;
  double progress_40s = 0.0;
  bool has_40s = false;
  double max_progress = 0.0;
  double avg_velocity = 0.0;
  double max_velocity = 0.0;
  double avg_min_so = 0.0;
  double min_so = 0.0;
  double max_acc = 0.0;
  double avg_acc = 0.0;
  double avg_jerk = 0.0;
  double avg_lane_changes = 0.0;
  double max_lane_changes = 0.0;
  int collisions = 0;
  double mean_solve_ms = 0.0;
  double median_solve_ms = 0.0;
  double mean_decision_ms = 0.0;
  double slack_exceed_fraction = 0.0;  // steps with slack > 0.1
  double min_cbf_margin = 0.0;
};

TrackLogData run_track(std::uint64_t seed, const SimConfig& cfg, Policy policy);

MetricsSummary compute_metrics(const std::vector<TrackLogData>& logs);

// Lane changes counted when the lane index switches and holds >= 1 s.
int count_lane_changes(const TrackLogData& log);

struct SuiteResult {
  std::vector<Policy> policies;
  std::vector<MetricsSummary> summaries;        // indexed like policies
  std::vector<std::vector<TrackLogData>> logs;  // [policy][track]
};

// Matched seeds across policies: track i uses base_seed + i for every policy.
SuiteResult run_suite(int n_tracks, std::uint64_t base_seed, const SimConfig& cfg,
                      const std::vector<Policy>& policies, int threads = 0);

void write_log_csv(const TrackLogData& log, std::ostream& os);
TrackLogData read_log_csv(std::istream& is);

}  // namespace ideam
