#pragma once

namespace bellsim::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 1,
  kConfigError = 2,
  kResourceError = 3,
  kVerificationError = 4,
};

// Entry point behind the `bellsim` binary:
//   bellsim run <config.json> [--seed N] [--threads N]
//   bellsim analyze <pairs.txt | arm_A.events arm_B.events> [--tau T] [--policy P]
//                   [--out DIR] [--z-threshold Z] [--tolerance E] [--project-singles]
int run_cli(int argc, const char* const* argv);

}  // namespace bellsim::cli
