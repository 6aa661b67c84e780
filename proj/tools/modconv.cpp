#include <iostream>
#include <string>
#include <vector>

#include "modconv/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return static_cast<int>(modconv::run_cli(args, std::cout, std::cerr));
}
