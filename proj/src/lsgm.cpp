#include "ideam/lsgm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ideam {

const char* node_name(int node) {
  static const char* names[kNodeCount] = {"R1", "R2", "C1", "C2", "L1", "L2"};
  return names[node];
}

Adjacency default_group_graph() {
  Adjacency adj;
  for (int node = 0; node < kNodeCount; ++node) {
    const int lane = node_lane(node);
    const int level = node_level(node);
    adj[static_cast<std::size_t>(node)].push_back(node_index(lane, 3 - level));
    for (int other : {lane - 1, lane + 1}) {
      if (other < 0 || other > 2) continue;
      adj[static_cast<std::size_t>(node)].push_back(node_index(other, 1));
      adj[static_cast<std::size_t>(node)].push_back(node_index(other, 2));
    }
  }
  return adj;
}

std::array<VehicleGroup, kNodeCount> build_groups(
    double ego_s, double ego_v, const std::vector<TrafficView>& traffic) {
  std::array<VehicleGroup, kNodeCount> groups;
  for (int lane = 0; lane < 3; ++lane) {
    // Nearest-first leaders (ahead) and followers (behind or beside).
    std::vector<std::pair<double, int>> leaders, followers;
    for (std::size_t i = 0; i < traffic.size(); ++i) {
      if (traffic[i].lane != lane) continue;
      const double ds = traffic[i].s - ego_s;
      if (ds > 0.0)
        leaders.emplace_back(ds, static_cast<int>(i));
      else
        followers.emplace_back(ds, static_cast<int>(i));
    }
    std::sort(leaders.begin(), leaders.end());
    std::sort(followers.begin(), followers.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    const auto member = [&](const std::vector<std::pair<double, int>>& v,
                            std::size_t rank, double fallback_s) -> GroupMember {
      if (rank < v.size()) {
        const int idx = v[rank].second;
        return {traffic[static_cast<std::size_t>(idx)].s,
                traffic[static_cast<std::size_t>(idx)].v, idx};
      }
      return {fallback_s, ego_v, -1};
    };

    VehicleGroup g1;
    g1.lane = lane;
    g1.level = 1;
    g1.leader = member(leaders, 0, ego_s + kVirtualFar);
    g1.follower = member(followers, 0, ego_s - kVirtualFar);

    VehicleGroup g2;
    g2.lane = lane;
    g2.level = 2;
    g2.follower = member(leaders, 0, ego_s + kVirtualFar);
    g2.leader = member(leaders, 1, ego_s + 2.0 * kVirtualFar);

    groups[static_cast<std::size_t>(node_index(lane, 1))] = g1;
    groups[static_cast<std::size_t>(node_index(lane, 2))] = g2;
  }
  return groups;
}

std::array<bool, kNodeCount> gap_magnitude_judge(
    const std::array<VehicleGroup, kNodeCount>& groups, const LsgmParams& p) {
  std::array<bool, kNodeCount> excluded{};
  for (int i = 0; i < kNodeCount; ++i)
    excluded[static_cast<std::size_t>(i)] =
        groups[static_cast<std::size_t>(i)].gap() < p.min_gap;
  return excluded;
}

double predicted_member_s(const GroupMember& m, const PredictionTable& pred, int k) {
  if (m.index >= 0) {
    const auto& row = pred.rows[static_cast<std::size_t>(m.index)];
    return row[static_cast<std::size_t>(k)].s;
  }
  return m.s + static_cast<double>(k) * pred.dt * m.v;
}

bool risk_assessment(const VehicleGroup& pointing, const VehicleGroup& pointed,
                     int depth, const PredictionTable& pred, const RiskParams& p) {
  if (depth < 1) throw std::invalid_argument("risk depth must be >= 1");
  const int k_begin = (depth - 1) * p.N_seg;
  const int k_end = depth * p.N_seg;  // exclusive
  if (k_end - 1 > pred.horizon_steps)
    throw std::out_of_range("prediction horizon too short for risk segment");

  const double v_l = pointing.leader.v;
  const double v_f = pointed.follower.v;
  const double d_risk = (v_l > v_f)
                            ? 2.0 * p.l_diag + p.eps
                            : 2.0 * p.l_diag + p.n * (v_f - v_l) + p.eps;
  for (int k = k_begin; k < k_end; ++k) {
    const double s_l = predicted_member_s(pointing.leader, pred, k);
    const double s_f = predicted_member_s(pointed.follower, pred, k);
    if (s_l - s_f < d_risk) return false;
  }
  return true;
}

bool level_check_skip(int node_level_value, int max_visited_level) {
  return node_level_value < max_visited_level;
}

namespace {

void c_dfs_recurse(const std::vector<DfsNode>& nodes,
                   const std::vector<std::vector<int>>& adjacency,
                   const std::vector<bool>& alive, int current, int end, int depth,
                   std::vector<int>& path, std::vector<int>& max_level,
                   const RiskPredicate& risk_ok,
                   std::vector<std::vector<int>>& out) {
  path.push_back(current);
  const int lane = nodes[static_cast<std::size_t>(current)].lane;
  const int level = nodes[static_cast<std::size_t>(current)].level;
  const int saved_level = max_level[static_cast<std::size_t>(lane)];
  max_level[static_cast<std::size_t>(lane)] = std::max(saved_level, level);

  if (current == end) {
    out.push_back(path);
  } else {
    for (int next : adjacency[static_cast<std::size_t>(current)]) {
      if (!alive[static_cast<std::size_t>(next)]) continue;
      if (std::find(path.begin(), path.end(), next) != path.end()) continue;
      if (level_check_skip(nodes[static_cast<std::size_t>(next)].level,
                           max_level[static_cast<std::size_t>(
                               nodes[static_cast<std::size_t>(next)].lane)]))
        continue;
      if (!risk_ok(current, next, depth)) continue;
      c_dfs_recurse(nodes, adjacency, alive, next, end, depth + 1, path, max_level,
                    risk_ok, out);
    }
  }
  max_level[static_cast<std::size_t>(lane)] = saved_level;
  path.pop_back();
}

}  // namespace

std::vector<std::vector<int>> c_dfs(const std::vector<DfsNode>& nodes,
                                    const std::vector<std::vector<int>>& adjacency,
                                    const std::vector<bool>& alive, int start,
                                    int end, int depth0,
                                    const RiskPredicate& risk_ok) {
  std::vector<std::vector<int>> out;
  if (!alive[static_cast<std::size_t>(start)] || !alive[static_cast<std::size_t>(end)])
    return out;
  int max_lane = 0;
  for (const auto& n : nodes) max_lane = std::max(max_lane, n.lane);
  std::vector<int> max_level(static_cast<std::size_t>(max_lane) + 1, 0);
  std::vector<int> path;
  c_dfs_recurse(nodes, adjacency, alive, start, end, depth0, path, max_level,
                risk_ok, out);
  return out;
}

namespace {

// Smaller rank wins ties: current lane, then Center > Left > Right.
int lane_preference(int lane, int current_lane) {
  if (lane == current_lane) return 0;
  if (lane == 1) return 1;
  if (lane == 2) return 2;
  return 3;
}

}  // namespace

int long_term_efficiency(const std::array<VehicleGroup, kNodeCount>& groups,
                         const std::array<bool, kNodeCount>& alive,
                         const PredictionTable& pred, int T_long, int current_lane) {
  int best = -1;
  double best_s = 0.0;
  for (int node = 0; node < kNodeCount; ++node) {
    if (!alive[static_cast<std::size_t>(node)]) continue;
    const double s =
        predicted_member_s(groups[static_cast<std::size_t>(node)].leader, pred, T_long);
    if (best < 0) {
      best = node;
      best_s = s;
      continue;
    }
    if (s > best_s + 1e-9) {
      best = node;
      best_s = s;
    } else if (std::abs(s - best_s) <= 1e-9) {
      const int pref_new = lane_preference(node_lane(node), current_lane);
      const int pref_best = lane_preference(node_lane(best), current_lane);
      if (pref_new < pref_best ||
          (pref_new == pref_best && node_level(node) < node_level(best))) {
        best = node;
        best_s = s;
      }
    }
  }
  if (best < 0) throw std::runtime_error("no live nodes for long-term selection");
  return best;
}

int short_term_efficiency(const std::vector<std::vector<int>>& paths,
                          const std::array<VehicleGroup, kNodeCount>& groups,
                          const PredictionTable& pred, const LsgmParams& p,
                          int current_lane) {
  // Candidates are the distinct first nodes after the shared start.
  std::vector<int> candidates;
  for (const auto& path : paths) {
    const int next = path.size() >= 2 ? path[1] : path[0];
    if (std::find(candidates.begin(), candidates.end(), next) == candidates.end())
      candidates.push_back(next);
  }
  if (candidates.size() == 1) return candidates.front();

  std::vector<int> horizons;
  for (int T = p.T_short_min; T <= p.T_short_max; T += p.extension_step)
    horizons.push_back(T);
  horizons.push_back(p.T_long);

  int best = candidates.front();
  for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
    const int T = horizons[hi];
    double best_s = -1.0e300, second_s = -1.0e300;
    best = candidates.front();
    for (int node : candidates) {
      const double s = predicted_member_s(
          groups[static_cast<std::size_t>(node)].leader, pred, T);
      if (s > best_s) {
        second_s = best_s;
        best_s = s;
        best = node;
      } else if (s > second_s) {
        second_s = s;
      }
    }
    if (best_s - second_s >= p.d_threshold) return best;
    if (hi + 1 == horizons.size()) {
      // Still inseparable at the long horizon: lane preference decides.
      for (int node : candidates) {
        const double s = predicted_member_s(
            groups[static_cast<std::size_t>(node)].leader, pred, T);
        if (s < best_s - p.d_threshold) continue;
        if (node == best) continue;
        const int pref_new = lane_preference(node_lane(node), current_lane);
        const int pref_best = lane_preference(node_lane(best), current_lane);
        if (pref_new < pref_best ||
            (pref_new == pref_best && node_level(node) < node_level(best)))
          best = node;
      }
    }
  }
  return best;
}

LsgmResult lsgm_decide(const std::array<VehicleGroup, kNodeCount>& groups,
                       const Adjacency& adjacency, int current_node,
                       const PredictionTable& pred, const LsgmParams& lp,
                       const RiskParams& rp) {
  LsgmResult res;
  res.target = current_node;

  auto excluded = gap_magnitude_judge(groups, lp);
  excluded[static_cast<std::size_t>(current_node)] = false;  // ego occupies it
  std::array<bool, kNodeCount> alive{};
  for (int i = 0; i < kNodeCount; ++i) {
    alive[static_cast<std::size_t>(i)] = !excluded[static_cast<std::size_t>(i)];
    if (excluded[static_cast<std::size_t>(i)])
      res.excluded_mask |= static_cast<std::uint8_t>(1u << i);
  }

  std::vector<DfsNode> nodes(kNodeCount);
  for (int i = 0; i < kNodeCount; ++i)
    nodes[static_cast<std::size_t>(i)] = {node_lane(i), node_level(i)};
  std::vector<std::vector<int>> adj(kNodeCount);
  for (int i = 0; i < kNodeCount; ++i)
    adj[static_cast<std::size_t>(i)] = adjacency[static_cast<std::size_t>(i)];

  const RiskPredicate risk_ok = [&](int from, int to, int depth) {
    return risk_assessment(groups[static_cast<std::size_t>(from)],
                           groups[static_cast<std::size_t>(to)], depth, pred, rp);
  };

  const int current_lane = node_lane(current_node);
  for (int iter = 0; iter < kNodeCount; ++iter) {
    int live_count = 0;
    for (bool a : alive) live_count += a ? 1 : 0;
    if (live_count <= 1) break;  // only the current node remains

    const int n_long =
        long_term_efficiency(groups, alive, pred, lp.T_long, current_lane);
    res.long_term = n_long;
    if (n_long == current_node) {
      res.target = current_node;
      return res;
    }

    std::vector<bool> alive_v(alive.begin(), alive.end());
    auto paths = c_dfs(nodes, adj, alive_v, current_node, n_long, 1, risk_ok);
    if (!paths.empty()) {
      std::size_t min_len = paths.front().size();
      for (const auto& p : paths) min_len = std::min(min_len, p.size());
      std::vector<std::vector<int>> shortest;
      for (auto& p : paths)
        if (p.size() == min_len) shortest.push_back(std::move(p));
      res.path_count = static_cast<int>(shortest.size());
      if (shortest.size() == 1)
        res.target = shortest.front().size() >= 2 ? shortest.front()[1]
                                                  : shortest.front()[0];
      else
        res.target = short_term_efficiency(shortest, groups, pred, lp, current_lane);
      return res;
    }
    alive[static_cast<std::size_t>(n_long)] = false;  // UpdateGraphAndNodes
    ++res.retries;
  }
  res.target = current_node;
  return res;
}

}  // namespace ideam
