#include <iostream>
#include <string>
#include <vector>

#include "knotcord/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return knotcord::run_cli(args, std::cout, std::cerr);
}
