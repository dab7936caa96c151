#include <iostream>
#include <string>
#include <vector>

#include "hforge/cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hforge::cli::run_cli(args, std::cout, std::cerr);
}
