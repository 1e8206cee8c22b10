#include <iostream>
#include <string>
#include <vector>

#include "zeno_tsvf/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return zeno_tsvf::cli::run(std::move(args), std::cout, std::cerr);
}
