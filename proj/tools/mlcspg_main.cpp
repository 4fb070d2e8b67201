#include <iostream>
#include <string>
#include <vector>

#include "mlcspg/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return mlcspg::run_cli(args, std::cout, std::cerr);
}
