#include "cli.hpp"

int main(int argc, char** argv) { return bellsim::cli::run_cli(argc, argv); }
