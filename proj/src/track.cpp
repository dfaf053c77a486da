#include "ideam/track.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace ideam {

double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a <= 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

double wrap_s(double s, double length) {
  double w = std::fmod(s, length);
  if (w < 0.0) w += length;
  return w;
}

double loop_delta(double s_to, double s_from, double length) {
  double d = wrap_s(s_to - s_from, length);
  if (d > 0.5 * length) d -= length;
  return d;
}

TrackModel TrackModel::build(const TrackConfig& cfg) {
  if (cfg.straight_length < 0.0 || cfg.radius <= 0.0)
    throw std::invalid_argument("track geometry does not form a closed loop");
  if (1.0 / cfg.radius > 0.1 + 1e-12)
    throw std::invalid_argument("track curvature bound exceeded (|kappa| <= 0.1)");
  if (cfg.lane_count != 3)
    throw std::invalid_argument("track requires exactly 3 lanes");
  if (cfg.lane_width <= 0.0)
    throw std::invalid_argument("lane width must be positive");
  if (cfg.sample_spacing <= 0.0 || cfg.sample_spacing > 0.5)
    throw std::invalid_argument("sample spacing must be in (0, 0.5] m");

  TrackModel t;
  t.cfg_ = cfg;
  const double Ls = cfg.straight_length;
  const double R = cfg.radius;
  const double arc = M_PI * R;
  t.length_ = 2.0 * Ls + 2.0 * arc;

  // Counterclockwise: bottom straight, right semicircle, top straight,
  // left semicircle. s = 0 at (0, 0) heading +x.
  t.segments_.resize(4);
  t.segments_[0] = {false, 0.0, Ls, {0.0, 0.0}, 0.0, {}, 0.0, 0.0};
  t.segments_[1] = {true, Ls, arc, {}, 0.0, {Ls, R}, -M_PI / 2.0, 1.0 / R};
  t.segments_[2] = {false, Ls + arc, Ls, {Ls, 2.0 * R}, M_PI, {}, 0.0, 0.0};
  t.segments_[3] = {true, 2.0 * Ls + arc, arc, {}, 0.0, {0.0, R}, M_PI / 2.0, 1.0 / R};

  const auto n = static_cast<std::size_t>(std::ceil(t.length_ / cfg.sample_spacing));
  t.sample_s_.resize(n);
  t.sample_x_.resize(n);
  t.sample_y_.resize(n);
  t.sample_kappa_.resize(n);
  const double ds = t.length_ / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) * ds;
    Vec2 p;
    double h, k;
    t.eval(s, p, h, k);
    t.sample_s_[i] = s;
    t.sample_x_[i] = p.x;
    t.sample_y_[i] = p.y;
    t.sample_kappa_[i] = k;
  }
  return t;
}

const TrackModel::Segment& TrackModel::segment_at(double s_wrapped) const {
  for (std::size_t i = segments_.size(); i-- > 0;) {
    if (s_wrapped >= segments_[i].s0) return segments_[i];
  }
  return segments_.front();
}

void TrackModel::eval(double s, Vec2& p, double& h, double& kappa) const {
  const double sw = wrap_s(s, length_);
  const Segment& seg = segment_at(sw);
  const double u = sw - seg.s0;
  if (!seg.is_arc) {
    p.x = seg.start.x + u * std::cos(seg.heading);
    p.y = seg.start.y + u * std::sin(seg.heading);
    h = seg.heading;
    kappa = 0.0;
  } else {
    const double R = 1.0 / seg.kappa;
    const double ang = seg.angle0 + u / R;
    p.x = seg.center.x + R * std::cos(ang);
    p.y = seg.center.y + R * std::sin(ang);
    h = wrap_angle(ang + M_PI / 2.0);
    kappa = seg.kappa;
  }
}

Vec2 TrackModel::position(double s) const {
  Vec2 p;
  double h, k;
  eval(s, p, h, k);
  return p;
}

double TrackModel::heading(double s) const {
  Vec2 p;
  double h, k;
  eval(s, p, h, k);
  return h;
}

double TrackModel::curvature_at(double s) const {
  const double sw = wrap_s(s, length_);
  const double ds = length_ / static_cast<double>(sample_s_.size());
  const double f = sw / ds;
  const auto i = static_cast<std::size_t>(f) % sample_s_.size();
  const std::size_t j = (i + 1) % sample_s_.size();
  const double a = f - std::floor(f);
  return (1.0 - a) * sample_kappa_[i] + a * sample_kappa_[j];
}

double TrackModel::lane_offset(int lane) const {
  return (static_cast<double>(lane) - 1.0) * cfg_.lane_width;
}

int TrackModel::lane_of(double e_y) const {
  const int lane = static_cast<int>(std::lround(e_y / cfg_.lane_width)) + 1;
  return std::clamp(lane, 0, cfg_.lane_count - 1);
}

double TrackModel::lane_curvature(double s, int lane) const {
  const double k = curvature_at(s);
  const double denom = 1.0 - k * lane_offset(lane);
  return k / denom;
}

void TrackModel::frenet_to_global(const FrenetPose& pose, double& x, double& y,
                                  double& psi) const {
  Vec2 p;
  double h, k;
  eval(pose.s, p, h, k);
  // Left normal of the tangent direction.
  const double nx = -std::sin(h);
  const double ny = std::cos(h);
  x = p.x + pose.e_y * nx;
  y = p.y + pose.e_y * ny;
  psi = wrap_angle(h + pose.e_psi);
}

FrenetPose TrackModel::global_to_frenet(double x, double y, double psi) const {
  // Coarse pass over a decimated sample grid, then exact pass on the window
  // around the best coarse hit, then Newton refinement on the analytic path.
  const std::size_t n = sample_s_.size();
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::max();
  for (std::size_t i = 0; i < n; i += coarse_stride_) {
    const double dx = sample_x_[i] - x;
    const double dy = sample_y_[i] - y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  const auto stride = static_cast<long>(coarse_stride_);
  std::size_t best2 = best;
  best_d2 = std::numeric_limits<double>::max();
  for (long off = -stride; off <= stride; ++off) {
    const std::size_t i = static_cast<std::size_t>(
        (static_cast<long>(best) + off + static_cast<long>(n)) %
        static_cast<long>(n));
    const double dx = sample_x_[i] - x;
    const double dy = sample_y_[i] - y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best2 = i;
    }
  }

  double s = sample_s_[best2];
  for (int it = 0; it < 30; ++it) {
    Vec2 p;
    double h, k;
    eval(s, p, h, k);
    const double tx = std::cos(h);
    const double ty = std::sin(h);
    const double rx = p.x - x;
    const double ry = p.y - y;
    const double f = tx * rx + ty * ry;
    const double nx = -ty;
    const double ny = tx;
    const double fp = 1.0 + k * (nx * rx + ny * ry);
    if (std::abs(fp) < 1e-12) break;
    const double step = f / fp;
    s -= step;
    s = wrap_s(s, length_);
    if (std::abs(step) < 1e-13) break;
  }

  Vec2 p;
  double h, k;
  eval(s, p, h, k);
  const double nx = -std::sin(h);
  const double ny = std::cos(h);
  const double e_y = nx * (x - p.x) + ny * (y - p.y);
  const double dx = x - p.x;
  const double dy = y - p.y;
  if (std::sqrt(dx * dx + dy * dy) >
      static_cast<double>(cfg_.lane_count) * cfg_.lane_width)
    throw std::domain_error("point too far from track for unambiguous projection");

  FrenetPose out;
  out.s = wrap_s(s, length_);
  if (length_ - out.s < 1e-9) out.s = 0.0;  // seam tie toward smaller s
  out.e_y = e_y;
  out.e_psi = wrap_angle(psi - h);
  return out;
}

}  // namespace ideam
