#pragma once

#include <string>
#include <vector>

#include "ideam/harness.hpp"

namespace ideam {

// Linear-interpolation quantile of a sorted sample (p in [0, 1]).
double quantile_sorted(const std::vector<double>& sorted, double p);

struct Series {
  std::string label;
  std::vector<Vec2> points;
};

// Deterministic byte output for identical inputs (fixed float formatting).
std::string render_series_svg(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<Series>& series);

struct BoxGroup {
  std::string label;
  std::vector<double> values;
};

std::string render_boxplot_svg(const std::string& title, const std::string& y_label,
                               const std::vector<BoxGroup>& groups);

// v_x, a_x and e_y traces of one log; returns the files written.
std::vector<std::string> emit_log_plots(const TrackLogData& log,
                                        const std::string& out_dir);

// Progress boxplots across a suite (20 s and 40 s).
std::vector<std::string> emit_suite_plots(const SuiteResult& suite,
                                          const std::string& out_dir);

}  // namespace ideam
