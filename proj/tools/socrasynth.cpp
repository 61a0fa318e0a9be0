#include <unistd.h>

#include <iostream>

#include "socrasynth/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return socrasynth::run_cli(args, {std::cout, std::cerr, std::cin, isatty(STDIN_FILENO) != 0});
}
