#include <iostream>
#include <string>
#include <vector>

#include "edmfde/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return edmfde::cli::cli_dispatch(args, std::cout, std::cerr);
}
