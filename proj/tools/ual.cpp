#include <iostream>
#include <string>
#include <vector>

#include "ual/cli.hpp"

int main(int argc, char **argv) {
  std::vector<std::string> args(argv, argv + argc);
  return ual::cli::run(args, std::cout, std::cerr);
}
