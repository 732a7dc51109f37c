#include <iostream>
#include <string>
#include <vector>

#include "shallowid/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return shallowid::cli::run(args, std::cout, std::cerr);
}
