#include <iostream>
#include <string>
#include <vector>

#include "vreflab/cli.hpp"

#ifndef VREFLAB_DEFAULT_CONFIG
#define VREFLAB_DEFAULT_CONFIG "configs/default.json"
#endif

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return vreflab::run_cli(args, std::cout, std::cerr, VREFLAB_DEFAULT_CONFIG);
}
