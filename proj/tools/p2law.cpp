#include <iostream>
#include <string>
#include <vector>

#include "p2law/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return p2law::cli::run_cli(std::move(args), std::cout, std::cerr);
}
