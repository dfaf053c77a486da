#include "ideam/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ideam {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  if (sorted.size() == 1) return sorted.front();
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double f = pos - std::floor(pos);
  return sorted[lo] * (1.0 - f) + sorted[hi] * f;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

constexpr double kW = 720.0, kH = 360.0;
constexpr double kMl = 60.0, kMr = 15.0, kMt = 30.0, kMb = 40.0;

struct Range {
  double lo = 0.0, hi = 1.0;
  void expand(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double map(double v, double a, double b) const {
    const double span = hi - lo;
    if (span <= 0.0) return 0.5 * (a + b);
    return a + (v - lo) / span * (b - a);
  }
};

void svg_header(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kW)
     << "\" height=\"" << fmt(kH) << "\" viewBox=\"0 0 " << fmt(kW) << " " << fmt(kH)
     << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << fmt(kW) << "\" height=\"" << fmt(kH)
     << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << fmt(kW / 2) << "\" y=\"18\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"14\">"
     << title << "</text>\n";
}

void svg_axes(std::ostringstream& os, const std::string& x_label,
              const std::string& y_label) {
  os << "<line x1=\"" << fmt(kMl) << "\" y1=\"" << fmt(kH - kMb) << "\" x2=\""
     << fmt(kW - kMr) << "\" y2=\"" << fmt(kH - kMb)
     << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  os << "<line x1=\"" << fmt(kMl) << "\" y1=\"" << fmt(kMt) << "\" x2=\"" << fmt(kMl)
     << "\" y2=\"" << fmt(kH - kMb) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  os << "<text x=\"" << fmt(kW / 2) << "\" y=\"" << fmt(kH - 8)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
     << x_label << "</text>\n";
  os << "<text x=\"14\" y=\"" << fmt(kH / 2)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
        "transform=\"rotate(-90 14 "
     << fmt(kH / 2) << ")\">" << y_label << "</text>\n";
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                         "#8c564b"};

}  // namespace

std::string render_series_svg(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<Series>& series) {
  std::ostringstream os;
  svg_header(os, title);
  svg_axes(os, x_label, y_label);

  bool any = false;
  Range xr, yr;
  bool first = true;
  for (const auto& s : series)
    for (const auto& p : s.points) {
      if (first) {
        xr.lo = xr.hi = p.x;
        yr.lo = yr.hi = p.y;
        first = false;
      }
      xr.expand(p.x);
      yr.expand(p.y);
      any = true;
    }
  if (any) {
    if (yr.hi - yr.lo < 1e-12) {
      yr.lo -= 1.0;
      yr.hi += 1.0;
    }
    int ci = 0;
    for (const auto& s : series) {
      os << "<polyline fill=\"none\" stroke=\"" << kColors[ci % 6]
         << "\" stroke-width=\"1.2\" points=\"";
      for (const auto& p : s.points)
        os << fmt(xr.map(p.x, kMl, kW - kMr)) << ","
           << fmt(yr.map(p.y, kH - kMb, kMt)) << " ";
      os << "\"/>\n";
      os << "<text x=\"" << fmt(kW - kMr - 120) << "\" y=\""
         << fmt(kMt + 16.0 * (ci + 1)) << "\" font-family=\"sans-serif\" "
         << "font-size=\"11\" fill=\"" << kColors[ci % 6] << "\">" << s.label
         << "</text>\n";
      ++ci;
    }
    // Extent annotations.
    os << "<text x=\"" << fmt(kMl) << "\" y=\"" << fmt(kH - kMb + 14)
       << "\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(xr.lo)
       << "</text>\n";
    os << "<text x=\"" << fmt(kW - kMr) << "\" y=\"" << fmt(kH - kMb + 14)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
       << fmt(xr.hi) << "</text>\n";
    os << "<text x=\"" << fmt(kMl - 4) << "\" y=\"" << fmt(kH - kMb)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
       << fmt(yr.lo) << "</text>\n";
    os << "<text x=\"" << fmt(kMl - 4) << "\" y=\"" << fmt(kMt + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
       << fmt(yr.hi) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string render_boxplot_svg(const std::string& title, const std::string& y_label,
                               const std::vector<BoxGroup>& groups) {
  std::ostringstream os;
  svg_header(os, title);
  svg_axes(os, "", y_label);

  Range yr;
  bool first = true;
  for (const auto& g : groups)
    for (double v : g.values) {
      if (first) {
        yr.lo = yr.hi = v;
        first = false;
      }
      yr.expand(v);
    }
  if (!first) {
    if (yr.hi - yr.lo < 1e-12) {
      yr.lo -= 1.0;
      yr.hi += 1.0;
    }
    const double span = (kW - kMl - kMr) / static_cast<double>(groups.size());
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      std::vector<double> v = groups[gi].values;
      std::sort(v.begin(), v.end());
      if (v.empty()) continue;
      const double q1 = quantile_sorted(v, 0.25);
      const double q2 = quantile_sorted(v, 0.5);
      const double q3 = quantile_sorted(v, 0.75);
      const double cx = kMl + span * (static_cast<double>(gi) + 0.5);
      const double bw = std::min(40.0, span * 0.5);
      const auto ymap = [&](double val) { return yr.map(val, kH - kMb, kMt); };
      const char* color = kColors[gi % 6];
      os << "<line x1=\"" << fmt(cx) << "\" y1=\"" << fmt(ymap(v.front()))
         << "\" x2=\"" << fmt(cx) << "\" y2=\"" << fmt(ymap(v.back()))
         << "\" stroke=\"" << color << "\"/>\n";
      os << "<rect x=\"" << fmt(cx - bw / 2) << "\" y=\"" << fmt(ymap(q3))
         << "\" width=\"" << fmt(bw) << "\" height=\"" << fmt(ymap(q1) - ymap(q3))
         << "\" fill=\"" << color << "\" fill-opacity=\"0.3\" stroke=\"" << color
         << "\"/>\n";
      os << "<line x1=\"" << fmt(cx - bw / 2) << "\" y1=\"" << fmt(ymap(q2))
         << "\" x2=\"" << fmt(cx + bw / 2) << "\" y2=\"" << fmt(ymap(q2))
         << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      os << "<text x=\"" << fmt(cx) << "\" y=\"" << fmt(kH - kMb + 14)
         << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
         << groups[gi].label << "</text>\n";
    }
    os << "<text x=\"" << fmt(kMl - 4) << "\" y=\"" << fmt(kH - kMb)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
       << fmt(yr.lo) << "</text>\n";
    os << "<text x=\"" << fmt(kMl - 4) << "\" y=\"" << fmt(kMt + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
       << fmt(yr.hi) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
}

}  // namespace

std::vector<std::string> emit_log_plots(const TrackLogData& log,
                                        const std::string& out_dir) {
  Series vx{"v_x [m/s]", {}}, ax{"a_x [m/s^2]", {}}, ey{"e_y [m]", {}};
  for (const auto& st : log.steps) {
    vx.points.push_back({st.t, st.ego.v_x});
    ax.points.push_back({st.t, st.input.a_x});
    ey.points.push_back({st.t, st.ego.e_y});
  }
  std::vector<std::string> files;
  const std::string base =
      out_dir + "/replay_" + policy_name(log.policy) + "_" + std::to_string(log.seed);
  write_file(base + "_vx.svg",
             render_series_svg("longitudinal velocity", "t [s]", "v_x [m/s]", {vx}));
  files.push_back(base + "_vx.svg");
  write_file(base + "_ax.svg",
             render_series_svg("acceleration command", "t [s]", "a_x [m/s^2]", {ax}));
  files.push_back(base + "_ax.svg");
  write_file(base + "_ey.svg",
             render_series_svg("lateral deviation", "t [s]", "e_y [m]", {ey}));
  files.push_back(base + "_ey.svg");
  return files;
}

std::vector<std::string> emit_suite_plots(const SuiteResult& suite,
                                          const std::string& out_dir) {
  std::vector<std::string> files;
  for (const double horizon : {20.0, 40.0}) {
    std::vector<BoxGroup> groups;
    for (std::size_t p = 0; p < suite.policies.size(); ++p) {
      BoxGroup g;
      g.label = policy_name(suite.policies[p]);
      for (const auto& log : suite.logs[p]) {
        if (log.steps.empty()) continue;
        const auto idx = static_cast<std::size_t>(
            std::min<long long>(std::llround(horizon / log.dt),
                                static_cast<long long>(log.steps.size()) - 1));
        g.values.push_back(log.steps[idx].ego.s - log.steps.front().ego.s);
      }
      groups.push_back(std::move(g));
    }
    const std::string path =
        out_dir + "/boxplot_progress_" + std::to_string(static_cast<int>(horizon)) +
        "s.svg";
    write_file(path, render_boxplot_svg("progress at " +
                                            std::to_string(static_cast<int>(horizon)) +
                                            " s",
                                        "progress [m]", groups));
    files.push_back(path);
  }
  return files;
}

}  // namespace ideam
