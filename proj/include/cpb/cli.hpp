#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cpb/config.hpp"
#include "cpb/verify.hpp"

namespace cpb {

// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitSuiteFailure = 1,
  kExitParse = 2,
  kExitPrecondition = 3,
  kExitIo = 4,
};

// Runs one command; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

// Model and both histories of a witness as two config documents that the
// posterior command accepts, followed by the recorded values.
std::string format_witness(const Witness& w, const std::string& scenario);

} // namespace cpb
