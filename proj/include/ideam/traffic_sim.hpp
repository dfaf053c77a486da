#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ideam/track.hpp"
#include "ideam/vehicle_models.hpp"

namespace ideam {

// Deterministic uniform sampling on top of a fixed-width generator; the
// mapping from raw bits to doubles is pinned so streams are reproducible
// independent of the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next_u64() {
    // xorshift* variant; fixed algorithm, stable across platforms.
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1DULL;
  }
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::uint64_t state_;
};

struct IdmParams {
  double v0 = 12.0;       // desired speed
  double T = 1.5;         // time headway
  double s0 = 2.0;        // minimum gap
  double a_idm = 1.5;     // max acceleration
  double b_idm = 2.0;     // comfortable deceleration
  double delta_idm = 4.0; // velocity exponent
};

struct PidGains {
  double k_p = 0.08;
  double k_i = 0.01;
  double k_d = 0.25;
  double k_psi = 0.9;
};

// Lateral lane-tracking controller state for one vehicle.
class LanePid {
 public:
  explicit LanePid(PidGains g = {}) : gains_(g) {}
  // e_y is measured relative to the tracked lane centerline.
  double step(double e_y, double e_psi, double dt);
  void reset();
  const PidGains& gains() const { return gains_; }

 private:
  PidGains gains_{};
  double integral_ = 0.0;
  double prev_e_y_ = 0.0;
  bool has_prev_ = false;
};

inline constexpr double kIdmAccelLimit = 3.0;

// IDM acceleration; gap is bumper-to-bumper, approach_rate = v - v_leader.
// Non-positive gap returns the emergency braking value.
double idm_acceleration(double v, double approach_rate, double gap,
                        const IdmParams& p);

// Feedback lane-tracking steering, clamped to the steering limit.
double pid_steering(LanePid& pid, double e_y, double e_psi, double dt);

// Kinematic steady-state steering for a path of the given curvature.
double curvature_feedforward(double kappa_lane, const ChassisParams& p);

struct ScenarioConfig {
  std::uint64_t seed = 1;
  int vehicle_count = 15;
  double spawn_gap_min = 14.0;   // same-lane center-to-center lower bound
  double ego_clear_ahead = 30.0; // keep this window ahead of the ego empty
  double ego_clear_behind = 15.0;
  double v0_min = 8.0;
  double v0_max = 14.0;
  double init_speed_factor_min = 0.85;
  double init_speed_factor_max = 1.0;
  double duration = 40.0;
  double dt = 0.1;
};

struct SpawnedVehicle {
  SurroundingState state{};
  IdmParams idm{};
};

// Deterministic for a given seed; throws on infeasible density.
std::vector<SpawnedVehicle> spawn_scenario(const ScenarioConfig& cfg,
                                           const TrackModel& track,
                                           const ChassisParams& chassis);

// Constant-velocity longitudinal prediction per vehicle, in (possibly
// unwrapped) Frenet s. Entry k holds the state after k steps; row length
// is horizon_steps + 1.
struct PredictionTable {
  struct Entry {
    double s{};
    double v{};
  };
  std::vector<std::vector<Entry>> rows;  // indexed by vehicle
  int horizon_steps{};
  double dt{};
};

PredictionTable predict_positions(const std::vector<double>& s,
                                  const std::vector<double>& v,
                                  int horizon_steps, double dt);

}  // namespace ideam
