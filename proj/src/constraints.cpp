#include "ideam/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ideam {

double h_lon(double ego_s, double ego_vx, double s_i, LonRole role,
             const LonCbfParams& p) {
  const double gap =
      (role == LonRole::CurrentFollower) ? (ego_s - s_i) : (s_i - ego_s);
  return gap - p.T_d * ego_vx - p.d_0;
}

std::vector<LinearRow> lon_dcbf_rows(LonRole role, const std::vector<double>& s_i,
                                     const LonCbfParams& p, const VarLayout& layout,
                                     int slack_index, int vehicle_id) {
  if (s_i.size() < static_cast<std::size_t>(layout.N) + 1)
    throw std::invalid_argument("surrounding prediction shorter than horizon");
  const double sign = (role == LonRole::CurrentFollower) ? 1.0 : -1.0;
  const RowFamily family = role == LonRole::CurrentLeader    ? RowFamily::LonLeader
                           : role == LonRole::CurrentFollower ? RowFamily::LonFollower
                                                              : RowFamily::LonDesiredLeader;
  std::vector<LinearRow> rows;
  rows.reserve(static_cast<std::size_t>(layout.N));
  const double decay = 1.0 - p.gamma;
  for (int k = 0; k < layout.N; ++k) {
    // h_k = sign*(s_k - s_i,k) - T_d v_k - d_0, affine in the decision vars.
    LinearRow row;
    row.tag = {family, vehicle_id, k};
    row.coeffs.emplace_back(layout.x_index(k + 1, kS), sign);
    row.coeffs.emplace_back(layout.x_index(k + 1, kVx), -p.T_d);
    row.coeffs.emplace_back(layout.x_index(k, kS), -decay * sign);
    row.coeffs.emplace_back(layout.x_index(k, kVx), decay * p.T_d);
    row.coeffs.emplace_back(layout.slack_index(slack_index), 1.0);
    const double c_next = -sign * s_i[static_cast<std::size_t>(k) + 1] - p.d_0;
    const double c_curr = -sign * s_i[static_cast<std::size_t>(k)] - p.d_0;
    row.lower = -(c_next - decay * c_curr);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<LinearRow> lat_dcbf_rows(const std::vector<LateralNeighbor>& neighbors,
                                     const std::vector<double>& ego_prev_s,
                                     const LatCbfParams& p, const VarLayout& layout,
                                     const std::vector<int>& slack_indices) {
  if (neighbors.size() != slack_indices.size())
    throw std::invalid_argument("one slack per lateral neighbor required");
  std::vector<LinearRow> rows;
  const double decay = 1.0 - p.gamma;
  for (std::size_t j = 0; j < neighbors.size(); ++j) {
    const LateralNeighbor& nb = neighbors[j];
    if (nb.s.size() < static_cast<std::size_t>(layout.N) + 1)
      throw std::invalid_argument("neighbor prediction shorter than horizon");
    const double sign = nb.left_of_ego ? -1.0 : 1.0;  // h = sign*(e_y - e_y_j) - w - d
    for (int k = 0; k < layout.N; ++k) {
      const double ds = nb.s[static_cast<std::size_t>(k)] -
                        ego_prev_s[static_cast<std::size_t>(k)];
      if (std::abs(ds) > p.roi_half_length) continue;
      LinearRow row;
      row.tag = {RowFamily::Lateral, nb.vehicle_id, k};
      row.coeffs.emplace_back(layout.x_index(k + 1, kEy), sign);
      row.coeffs.emplace_back(layout.x_index(k, kEy), -decay * sign);
      row.coeffs.emplace_back(layout.slack_index(slack_indices[j]), 1.0);
      const double c_k = -sign * nb.e_y - p.vehicle_width - p.d_lat;
      row.lower = -(c_k - decay * c_k);  // e_y_j frozen across steps
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

Vec2 ellipse_project(const Vec2& query, const Vec2& center, double a, double b) {
  const double ds = query.x - center.x;
  const double de = query.y - center.y;
  if (std::abs(ds) < 1e-12 && std::abs(de) < 1e-12)
    throw std::domain_error("ellipse projection undefined at the center");

  const double a2 = a * a;
  const double b2 = b * b;
  // Stationarity gives the boundary point as a function of the multiplier;
  // g is strictly decreasing on (-min(a^2,b^2), inf).
  const auto g = [&](double lam) {
    const double ta = a * ds / (a2 + lam);
    const double tb = b * de / (b2 + lam);
    return ta * ta + tb * tb - 1.0;
  };
  const double m = std::min(a2, b2);
  double lo = -m * (1.0 - 1e-12) + 1e-300;
  if (!(g(lo) > 0.0)) {
    // Degenerate on-axis interior query: nudge off the axis.
    return ellipse_project({query.x + (std::abs(ds) < 1e-12 ? 1e-9 : 0.0),
                            query.y + (std::abs(de) < 1e-12 ? 1e-9 : 0.0)},
                           center, a, b);
  }
  double hi = std::max(1.0, a * std::abs(ds) + b * std::abs(de));
  while (g(hi) > 0.0) hi *= 2.0;

  double lam = 0.0;
  if (g(0.0) < 0.0)
    lam = 0.5 * (lo + 0.0), hi = 0.0;
  else
    lo = 0.0, lam = 0.5 * (lo + hi);

  for (int it = 0; it < 200; ++it) {
    const double gl = g(lam);
    if (gl > 0.0)
      lo = lam;
    else
      hi = lam;
    // Newton step with bisection safeguard.
    const double ta = a * ds / (a2 + lam);
    const double tb = b * de / (b2 + lam);
    const double gp = -2.0 * (ta * ta / (a2 + lam) + tb * tb / (b2 + lam));
    double next = lam - gl / gp;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - lam) < 1e-15 * std::max(1.0, std::abs(lam))) {
      lam = next;
      break;
    }
    lam = next;
  }
  return {center.x + a2 * ds / (a2 + lam), center.y + b2 * de / (b2 + lam)};
}

TangentCoeffs tangent_coeffs(const Vec2& pt, const Vec2& center, double a, double b) {
  const double a2 = a * a;
  const double b2 = b * b;
  TangentCoeffs t;
  t.A = b2 * (pt.x - center.x);
  t.B = a2 * (pt.y - center.y);
  t.C = b2 * (center.x * center.x - center.x * pt.x) +
        a2 * (center.y * center.y - center.y * pt.y) - a2 * b2;
  return t;
}

std::vector<LinearRow> dhocbf_rows(const std::vector<TangentCoeffs>& tangents,
                                   double psi0_x0, double psi0_x1,
                                   const DhocbfParams& p, const VarLayout& layout,
                                   int omega_base, int vehicle_id) {
  if (tangents.size() < static_cast<std::size_t>(p.N_dho) + 1)
    throw std::invalid_argument("need a tangent per step up to N_dho");
  std::vector<LinearRow> rows;
  rows.reserve(static_cast<std::size_t>(2 * p.N_dho - 1));

  for (int k = 0; k < p.N_dho; ++k) {
    const TangentCoeffs& t = tangents[static_cast<std::size_t>(k) + 1];
    LinearRow row;
    row.tag = {RowFamily::DhocbfFirst, vehicle_id, k};
    row.coeffs.emplace_back(layout.x_index(k + 1, kS), t.A);
    row.coeffs.emplace_back(layout.x_index(k + 1, kEy), t.B);
    const double decay = std::pow(1.0 - p.gamma1, k + 1);
    row.coeffs.emplace_back(layout.omega_index(omega_base + k), -decay * psi0_x0);
    row.lower = -t.C;
    rows.push_back(std::move(row));
  }

  for (int k = 0; k + 1 < p.N_dho; ++k) {
    // psi_1(x_{k+1}) = psi_0(x_{k+2}) - (1 - gamma1) psi_0(x_{k+1})
    const TangentCoeffs& t2 = tangents[static_cast<std::size_t>(k) + 2];
    const TangentCoeffs& t1 = tangents[static_cast<std::size_t>(k) + 1];
    const double g1 = 1.0 - p.gamma1;
    const double decay2 = std::pow(1.0 - p.gamma2, k + 1);
    LinearRow row;
    row.tag = {RowFamily::DhocbfSecond, vehicle_id, k};
    row.coeffs.emplace_back(layout.x_index(k + 2, kS), t2.A);
    row.coeffs.emplace_back(layout.x_index(k + 2, kEy), t2.B);
    row.coeffs.emplace_back(layout.x_index(k + 1, kS), -g1 * t1.A);
    row.coeffs.emplace_back(layout.x_index(k + 1, kEy), -g1 * t1.B);
    row.coeffs.emplace_back(layout.omega_index(omega_base + p.N_dho + k),
                            g1 * decay2 * psi0_x0);
    row.lower = decay2 * psi0_x1 - t2.C + g1 * t1.C;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<LinearRow> boundary_rows(double target_offset, double lambda_b,
                                     double hard_limit, const VarLayout& layout,
                                     int slack_index) {
  std::vector<LinearRow> rows;
  rows.reserve(static_cast<std::size_t>(3 * layout.N));
  for (int k = 1; k <= layout.N; ++k) {
    LinearRow up;
    up.tag = {RowFamily::BoundarySoft, -1, k};
    up.coeffs.emplace_back(layout.x_index(k, kEy), 1.0);
    up.coeffs.emplace_back(layout.slack_index(slack_index), -1.0);
    up.upper = target_offset + lambda_b;
    rows.push_back(std::move(up));

    LinearRow down;
    down.tag = {RowFamily::BoundarySoft, -1, k};
    down.coeffs.emplace_back(layout.x_index(k, kEy), 1.0);
    down.coeffs.emplace_back(layout.slack_index(slack_index), 1.0);
    down.lower = target_offset - lambda_b;
    rows.push_back(std::move(down));

    LinearRow hard;
    hard.tag = {RowFamily::BoundaryHard, -1, k};
    hard.coeffs.emplace_back(layout.x_index(k, kEy), 1.0);
    hard.lower = -hard_limit;
    hard.upper = hard_limit;
    rows.push_back(std::move(hard));
  }
  return rows;
}

std::vector<LinearRow> actuator_rows(const ActuatorLimits& lim, const VarLayout& layout,
                                     double prev_a, double prev_delta) {
  std::vector<LinearRow> rows;
  rows.reserve(static_cast<std::size_t>(4 * layout.N));
  for (int k = 0; k < layout.N; ++k) {
    LinearRow box_a;
    box_a.tag = {RowFamily::InputBox, -1, k};
    box_a.coeffs.emplace_back(layout.u_index(k, 0), 1.0);
    box_a.lower = lim.a_min;
    box_a.upper = lim.a_max;
    rows.push_back(std::move(box_a));

    LinearRow box_d;
    box_d.tag = {RowFamily::InputBox, -1, k};
    box_d.coeffs.emplace_back(layout.u_index(k, 1), 1.0);
    box_d.lower = -lim.delta_max;
    box_d.upper = lim.delta_max;
    rows.push_back(std::move(box_d));
  }
  const double da = lim.a_rate * lim.dt;
  const double dd = lim.delta_rate * lim.dt;
  {
    LinearRow r0a;
    r0a.tag = {RowFamily::InputRate, -1, 0};
    r0a.coeffs.emplace_back(layout.u_index(0, 0), 1.0);
    r0a.lower = prev_a - da;
    r0a.upper = prev_a + da;
    rows.push_back(std::move(r0a));

    LinearRow r0d;
    r0d.tag = {RowFamily::InputRate, -1, 0};
    r0d.coeffs.emplace_back(layout.u_index(0, 1), 1.0);
    r0d.lower = prev_delta - dd;
    r0d.upper = prev_delta + dd;
    rows.push_back(std::move(r0d));
  }
  for (int k = 0; k + 1 < layout.N; ++k) {
    LinearRow ra;
    ra.tag = {RowFamily::InputRate, -1, k + 1};
    ra.coeffs.emplace_back(layout.u_index(k + 1, 0), 1.0);
    ra.coeffs.emplace_back(layout.u_index(k, 0), -1.0);
    ra.lower = -da;
    ra.upper = da;
    rows.push_back(std::move(ra));

    LinearRow rd;
    rd.tag = {RowFamily::InputRate, -1, k + 1};
    rd.coeffs.emplace_back(layout.u_index(k + 1, 1), 1.0);
    rd.coeffs.emplace_back(layout.u_index(k, 1), -1.0);
    rd.lower = -dd;
    rd.upper = dd;
    rows.push_back(std::move(rd));
  }
  return rows;
}

}  // namespace ideam
