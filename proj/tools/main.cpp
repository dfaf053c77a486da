#include "ideam/cli_app.hpp"

int main(int argc, char** argv) { return ideam::run_cli(argc, argv); }
