#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "socrasynth/error.hpp"

namespace socrasynth {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBackend = 3;
inline constexpr int kExitValidation = 4;

int exit_code_for(const Error& error);

struct CliIo {
  std::ostream& out;
  std::ostream& err;
  std::istream& in;
  bool interactive = false;  // stdin is a terminal
};

// Runs one command. args excludes the program name.
int run_cli(const std::vector<std::string>& args, CliIo io);

}  // namespace socrasynth
