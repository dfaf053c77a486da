#include "ideam/cli_app.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ideam/harness.hpp"
#include "ideam/plots.hpp"
#include "ideam/sim_config.hpp"

namespace ideam {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string resolve_out_dir(const std::string& flag_value) {
  const char* env = std::getenv("IDEAM_OUT_DIR");
  std::string dir = (env != nullptr && *env != '\0') ? env : flag_value;
  if (dir.empty()) dir = ".";
  fs::create_directories(dir);
  return dir;
}

std::vector<Policy> parse_policies(const std::string& csv) {
  std::vector<Policy> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    Policy p;
    if (!parse_policy(tok, p))
      throw CLI::ValidationError("policies", "unknown policy: " + tok);
    out.push_back(p);
  }
  if (out.empty()) throw CLI::ValidationError("policies", "no policies given");
  return out;
}

json metrics_to_json(const MetricsSummary& m) {
  json j;
  j["tracks"] = m.tracks;
  j["progress_20s"] = m.progress_20s;
  if (m.has_40s)
    j["progress_40s"] = m.progress_40s;
  else
    j["progress_40s"] = nullptr;
  j["max_progress"] = m.max_progress;
  j["avg_velocity"] = m.avg_velocity;
  j["max_velocity"] = m.max_velocity;
  j["avg_min_so"] = m.avg_min_so;
  j["min_so"] = m.min_so;
  j["max_acc"] = m.max_acc;
  j["avg_acc"] = m.avg_acc;
  j["avg_jerk"] = m.avg_jerk;
  j["avg_lane_changes"] = m.avg_lane_changes;
  j["max_lane_changes"] = m.max_lane_changes;
  j["collisions"] = m.collisions;
  j["mean_solve_ms"] = m.mean_solve_ms;
  j["median_solve_ms"] = m.median_solve_ms;
  j["mean_decision_ms"] = m.mean_decision_ms;
  j["slack_exceed_fraction"] = m.slack_exceed_fraction;
  j["min_cbf_margin"] = m.min_cbf_margin;
  return j;
}

void print_comparison_table(const SuiteResult& suite) {
  std::printf("%-12s %9s %9s %9s %8s %8s %8s %8s %8s %8s %8s %6s\n", "policy",
              "p20[m]", "p40[m]", "maxP[m]", "avgV", "maxV", "avgMinSo", "minSo",
              "maxAcc", "avgAcc", "avgLC", "coll");
  for (std::size_t i = 0; i < suite.policies.size(); ++i) {
    const MetricsSummary& m = suite.summaries[i];
    std::printf("%-12s %9.2f %9.2f %9.2f %8.2f %8.2f %8.2f %8.2f %8.2f %8.2f %8.2f %6d\n",
                policy_name(suite.policies[i]), m.progress_20s, m.progress_40s,
                m.max_progress, m.avg_velocity, m.max_velocity, m.avg_min_so, m.min_so,
                m.max_acc, m.avg_acc, m.avg_lane_changes, m.collisions);
  }
}

void write_suite_outputs(const SuiteResult& suite, const SimConfig& cfg,
                         std::uint64_t seed, const std::string& out_dir,
                         bool with_logs) {
  json summary;
  summary["seed"] = seed;
  summary["tracks"] = suite.logs.empty() ? 0 : static_cast<int>(suite.logs[0].size());
  summary["config"] = json::parse(sim_config_to_json(cfg));
  for (std::size_t p = 0; p < suite.policies.size(); ++p) {
    json jp = metrics_to_json(suite.summaries[p]);
    json per_track = json::object();
    json p20 = json::array(), p40 = json::array(), lc = json::array(),
         so = json::array();
    for (const auto& log : suite.logs[p]) {
      if (log.steps.empty()) continue;
      const auto at = [&](double t) {
        const auto idx = static_cast<std::size_t>(
            std::min<long long>(std::llround(t / log.dt),
                                static_cast<long long>(log.steps.size()) - 1));
        return log.steps[idx].ego.s - log.steps.front().ego.s;
      };
      p20.push_back(at(20.0));
      p40.push_back(at(40.0));
      lc.push_back(count_lane_changes(log));
      double mn = kInf;
      for (const auto& st : log.steps) mn = std::min(mn, st.min_distance);
      so.push_back(std::isfinite(mn) ? mn : 0.0);
    }
    per_track["progress_20s"] = p20;
    per_track["progress_40s"] = p40;
    per_track["lane_changes"] = lc;
    per_track["min_so"] = so;
    jp["per_track"] = per_track;
    summary["policies"][policy_name(suite.policies[p])] = jp;
  }
  {
    std::ofstream f(out_dir + "/summary.json", std::ios::binary);
    f << summary.dump(2) << "\n";
  }
  save_sim_config(cfg, out_dir + "/resolved_config.json");
  if (with_logs) {
    fs::create_directories(out_dir + "/logs");
    for (std::size_t p = 0; p < suite.policies.size(); ++p) {
      for (const auto& log : suite.logs[p]) {
        std::ofstream f(out_dir + "/logs/" + policy_name(suite.policies[p]) + "_" +
                            std::to_string(log.seed) + ".csv",
                        std::ios::binary);
        write_log_csv(log, f);
      }
    }
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"closed-loop multi-lane traffic simulator with a graph decision "
               "layer and a CBF-constrained convex MPC planner"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 1;
  std::string out_flag = "out";
  int tracks = 20;
  std::string policies_csv = "ideam,noprobing,mobil";
  std::string policy_name_str = "ideam";
  double duration = -1.0;
  bool plot = false;
  bool no_probing = false;
  int threads = 0;

  auto* run = app.add_subcommand("run", "run a single track and write its log");
  run->add_option("--config", config_path, "config JSON path");
  run->add_option("--seed", seed, "scenario seed");
  run->add_option("--policy", policy_name_str, "ideam | noprobing | mobil");
  run->add_option("--duration", duration, "override duration [s]");
  run->add_option("--out", out_flag, "output directory");
  run->add_flag("--plot", plot, "emit SVG time series");
  run->add_flag("--no-probing", no_probing, "shorthand for --policy noprobing");

  auto* suite = app.add_subcommand("suite", "run matched-seed suites per policy");
  suite->add_option("--config", config_path, "config JSON path");
  suite->add_option("--seed", seed, "base seed");
  suite->add_option("--tracks", tracks, "tracks per policy")->check(CLI::PositiveNumber);
  suite->add_option("--policies", policies_csv, "comma-separated policy list");
  suite->add_option("--duration", duration, "override duration [s]");
  suite->add_option("--out", out_flag, "output directory");
  suite->add_option("--threads", threads, "worker threads (0 = auto)");
  suite->add_flag("--plot", plot, "emit progress boxplots");
  bool no_logs = false;
  suite->add_flag("--no-logs", no_logs, "skip per-track CSV logs");

  std::string replay_path;
  auto* replay = app.add_subcommand("replay", "recompute metrics from a log CSV");
  replay->add_option("log", replay_path, "log CSV path")->required();
  replay->add_option("--out", out_flag, "output directory");
  replay->add_flag("--plot", plot, "emit SVG time series");

  std::string summary_path;
  auto* plot_cmd = app.add_subcommand("plot", "boxplots from a suite summary.json");
  plot_cmd->add_option("summary", summary_path, "summary.json path")->required();
  plot_cmd->add_option("--out", out_flag, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run->parsed()) {
      SimConfig cfg =
          config_path.empty() ? default_sim_config() : load_sim_config(config_path);
      if (duration > 0.0) cfg.scenario.duration = duration;
      Policy policy;
      if (no_probing) policy_name_str = "noprobing";
      if (!parse_policy(policy_name_str, policy)) {
        std::cerr << "unknown policy: " << policy_name_str << "\n";
        return 2;
      }
      const std::string out_dir = resolve_out_dir(out_flag);
      const TrackLogData log = run_track(seed, cfg, policy);
      const std::string log_path = out_dir + "/" + std::string(policy_name(policy)) +
                                   "_" + std::to_string(seed) + ".csv";
      {
        std::ofstream f(log_path, std::ios::binary);
        write_log_csv(log, f);
      }
      const MetricsSummary m = compute_metrics({log});
      std::cout << metrics_to_json(m).dump(2) << "\n";
      std::cout << "log: " << log_path << "\n";
      if (plot)
        for (const auto& fpath : emit_log_plots(log, out_dir))
          std::cout << "plot: " << fpath << "\n";
      return 0;
    }
    if (suite->parsed()) {
      SimConfig cfg =
          config_path.empty() ? default_sim_config() : load_sim_config(config_path);
      if (duration > 0.0) cfg.scenario.duration = duration;
      const std::vector<Policy> pols = parse_policies(policies_csv);
      const std::string out_dir = resolve_out_dir(out_flag);
      const SuiteResult res = run_suite(tracks, seed, cfg, pols, threads);
      print_comparison_table(res);
      write_suite_outputs(res, cfg, seed, out_dir, !no_logs);
      std::cout << "summary: " << out_dir << "/summary.json\n";
      if (plot)
        for (const auto& fpath : emit_suite_plots(res, out_dir))
          std::cout << "plot: " << fpath << "\n";
      return 0;
    }
    if (replay->parsed()) {
      std::ifstream f(replay_path);
      if (!f) {
        std::cerr << "cannot open log: " << replay_path << "\n";
        return 2;
      }
      const TrackLogData log = read_log_csv(f);
      const MetricsSummary m = compute_metrics({log});
      std::cout << metrics_to_json(m).dump(2) << "\n";
      if (plot) {
        const std::string out_dir = resolve_out_dir(out_flag);
        for (const auto& fpath : emit_log_plots(log, out_dir))
          std::cout << "plot: " << fpath << "\n";
      }
      return 0;
    }
    if (plot_cmd->parsed()) {
      std::ifstream f(summary_path);
      if (!f) {
        std::cerr << "cannot open summary: " << summary_path << "\n";
        return 2;
      }
      json summary = json::parse(f);
      const std::string out_dir = resolve_out_dir(out_flag);
      std::vector<std::string> files;
      for (const char* key : {"progress_20s", "progress_40s"}) {
        std::vector<BoxGroup> groups;
        for (auto& [name, jp] : summary["policies"].items()) {
          BoxGroup g;
          g.label = name;
          for (const auto& v : jp["per_track"][key]) g.values.push_back(v.get<double>());
          groups.push_back(std::move(g));
        }
        const std::string path = out_dir + "/boxplot_" + key + ".svg";
        std::ofstream of(path, std::ios::binary);
        of << render_boxplot_svg(key, "progress [m]", groups);
        files.push_back(path);
      }
      for (const auto& fpath : files) std::cout << "plot: " << fpath << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace ideam
