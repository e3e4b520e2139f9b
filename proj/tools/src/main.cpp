#include <iostream>
#include <string>
#include <vector>

#include "bsc/experiments.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return bsc::cli::run_cli(args, std::cout, std::cerr);
}
