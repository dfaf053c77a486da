#pragma once

#include <cmath>
#include <vector>

namespace ideam {

struct Vec2 {
  double x{};
  double y{};
};

// Wrap an angle to (-pi, pi].
double wrap_angle(double a);

// Wrap an arc-length coordinate to [0, length).
double wrap_s(double s, double length);

// Signed distance from s_from to s_to going forward along a loop, in (-L/2, L/2].
double loop_delta(double s_to, double s_from, double length);

enum class Lane : int { Right = 0, Center = 1, Left = 2 };

// Path-relative pose: progress s, lateral deviation e_y (positive to the left
// of the travel direction) and heading error e_psi.
struct FrenetPose {
  double s{};
  double e_y{};
  double e_psi{};
};

struct TrackConfig {
  double straight_length = 150.0;
  double radius = 10.0;
  double lane_width = 4.0;
  int lane_count = 3;
  double sample_spacing = 0.25;
};

// Closed stadium loop: two straights joined by two constant-curvature
// semicircles, traversed counterclockwise. The reference centerline is the
// middle lane; lanes are parallel offsets. Immutable after construction.
class TrackModel {
 public:
  static TrackModel build(const TrackConfig& cfg);

  double length() const { return length_; }
  double lane_width() const { return cfg_.lane_width; }
  int lane_count() const { return cfg_.lane_count; }
  double sample_spacing() const { return cfg_.sample_spacing; }
  std::size_t sample_count() const { return sample_s_.size(); }

  // Signed centerline offset of a lane (Right = -w, Center = 0, Left = +w).
  double lane_offset(int lane) const;
  // Nearest lane index for a lateral deviation.
  int lane_of(double e_y) const;
  // Curvature of a lane's own centerline at reference arc length s.
  double lane_curvature(double s, int lane) const;

  // Analytic centerline evaluation (exact on straights and arcs).
  Vec2 position(double s) const;
  double heading(double s) const;
  // Linear interpolation of the precomputed curvature table.
  double curvature_at(double s) const;

  void frenet_to_global(const FrenetPose& pose, double& x, double& y,
                        double& psi) const;
  // Nearest-point projection onto the centerline. Throws std::domain_error
  // when the point is farther than lane_count * lane_width from the track.
  FrenetPose global_to_frenet(double x, double y, double psi) const;

  const std::vector<double>& curvature_table() const { return sample_kappa_; }
  double table_s(std::size_t i) const { return sample_s_[i]; }

 private:
  struct Segment {
    bool is_arc{};
    double s0{};      // arc length at segment start
    double len{};
    Vec2 start{};     // straight: start point
    double heading{}; // straight: constant heading
    Vec2 center{};    // arc: circle center
    double angle0{};  // arc: angle of start point seen from center
    double kappa{};
  };

  void eval(double s, Vec2& p, double& h, double& kappa) const;
  const Segment& segment_at(double s_wrapped) const;

  TrackConfig cfg_{};
  double length_{};
  std::vector<Segment> segments_;
  std::vector<double> sample_s_;
  std::vector<double> sample_x_;
  std::vector<double> sample_y_;
  std::vector<double> sample_kappa_;
  std::size_t coarse_stride_{8};
};

}  // namespace ideam
