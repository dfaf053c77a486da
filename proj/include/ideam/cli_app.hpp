#pragma once

namespace ideam {

// Entry point for the command-line tool. Subcommands: run, suite, replay, plot.
int run_cli(int argc, const char* const* argv);

}  // namespace ideam
