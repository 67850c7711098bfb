#include "cli/cli.hpp"

int main(int argc, char** argv) { return poseref::cli::run_cli(argc, argv); }
