#include "cli.hpp"

int main(int argc, char** argv) { return ucrbm::cli::run_cli(argc, argv); }
