#include "spdada/cli.hpp"

int main(int argc, char** argv) { return spdada::cli::run_cli(argc, argv); }
