#pragma once

#include <string>

#include "ideam/harness.hpp"

namespace ideam {

// Fully-resolved run configuration; every tunable lives here so a run is
// reproducible from the file alone.
SimConfig default_sim_config();

std::string sim_config_to_json(const SimConfig& cfg);
SimConfig sim_config_from_json(const std::string& text);

SimConfig load_sim_config(const std::string& path);
void save_sim_config(const SimConfig& cfg, const std::string& path);

}  // namespace ideam
