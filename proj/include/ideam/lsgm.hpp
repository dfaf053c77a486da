#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "ideam/traffic_sim.hpp"

namespace ideam {

// Sentinel offset for virtual far leaders/followers standing in for missing
// vehicles; level-2 virtual leaders sit one tier farther so group ordering
// stays strict.
inline constexpr double kVirtualFar = 1.0e6;

// A gap bounded by a leader and a follower in one lane. index < 0 marks a
// virtual vehicle; virtual vehicles move at the speed they were created with.
struct GroupMember {
  double s{};
  double v{};
  int index = -1;
};

struct VehicleGroup {
  int lane{};   // 0 = Right, 1 = Center, 2 = Left
  int level{};  // 1 = around ego, 2 = ahead of level 1
  GroupMember leader{};
  GroupMember follower{};
  double gap() const { return leader.s - follower.s; }
};

// Node indexing: lane * 2 + (level - 1) -> R1,R2,C1,C2,L1,L2.
inline constexpr int kNodeCount = 6;
inline int node_index(int lane, int level) { return lane * 2 + (level - 1); }
inline int node_lane(int node) { return node / 2; }
inline int node_level(int node) { return node % 2 + 1; }
const char* node_name(int node);

using Adjacency = std::array<std::vector<int>, kNodeCount>;

// Same-lane level pairs plus both levels of laterally adjacent lanes; no
// direct Left<->Right edges.
Adjacency default_group_graph();

struct RiskParams {
  double l_diag = 3.7;
  double eps = 3.5;
  double n = 3.0;
  int N_seg = 10;  // prediction steps per search depth
};

struct LsgmParams {
  int T_long = 70;
  int T_short_min = 20;
  int T_short_max = 60;
  int extension_step = 10;
  double d_threshold = 3.0;
  double min_gap = 10.9;
};

// Snapshot of one surrounding vehicle as seen by the decision layer, with s
// unwrapped relative to the ego.
struct TrafficView {
  double s{};
  double v{};
  int lane{};
};

std::array<VehicleGroup, kNodeCount> build_groups(double ego_s, double ego_v,
                                                  const std::vector<TrafficView>& traffic);

// True entries mark nodes whose gap is below the minimum (excluded).
std::array<bool, kNodeCount> gap_magnitude_judge(
    const std::array<VehicleGroup, kNodeCount>& groups, const LsgmParams& p);

double predicted_member_s(const GroupMember& m, const PredictionTable& pred, int k);

// Checks every step of prediction segment z_d between the pointing group's
// leader and the pointed group's follower. Throws when the table is shorter
// than the segment needs.
bool risk_assessment(const VehicleGroup& pointing, const VehicleGroup& pointed,
                     int depth, const PredictionTable& pred, const RiskParams& p);

// Skip rule: a node is pruned when its level is below the highest level
// already visited in its lane.
bool level_check_skip(int node_level_value, int max_visited_level);

// Generic node description for the search (lane ids need not be 0..2 here so
// the search can be exercised on arbitrary graphs).
struct DfsNode {
  int lane{};
  int level{};
};

using RiskPredicate = std::function<bool(int from, int to, int depth)>;

// Depth-first enumeration of simple start->end paths, pruned by the per-lane
// level rule and a per-edge, per-depth risk predicate. Depth starts at
// depth0 for edges leaving the start node and increments per transition.
std::vector<std::vector<int>> c_dfs(const std::vector<DfsNode>& nodes,
                                    const std::vector<std::vector<int>>& adjacency,
                                    const std::vector<bool>& alive, int start,
                                    int end, int depth0,
                                    const RiskPredicate& risk_ok);

// Node whose leader is predicted farthest at T_long. Ties prefer the current
// lane, then Center, Left, Right, then the lower level.
int long_term_efficiency(const std::array<VehicleGroup, kNodeCount>& groups,
                         const std::array<bool, kNodeCount>& alive,
                         const PredictionTable& pred, int T_long, int current_lane);

// Resolves between shortest paths by leader position of the first node after
// the start, lengthening the horizon while the top two stay within
// d_threshold.
int short_term_efficiency(const std::vector<std::vector<int>>& paths,
                          const std::array<VehicleGroup, kNodeCount>& groups,
                          const PredictionTable& pred, const LsgmParams& p,
                          int current_lane);

struct LsgmResult {
  int target = 0;                 // chosen vehicle-group node
  int long_term = 0;              // last long-term candidate examined
  std::uint8_t excluded_mask = 0; // gap-judge exclusions
  int path_count = 0;             // paths found for the returned decision
  int retries = 0;                // UpdateGraphAndNodes iterations
};

LsgmResult lsgm_decide(const std::array<VehicleGroup, kNodeCount>& groups,
                       const Adjacency& adjacency, int current_node,
                       const PredictionTable& pred, const LsgmParams& lp,
                       const RiskParams& rp);

}  // namespace ideam
