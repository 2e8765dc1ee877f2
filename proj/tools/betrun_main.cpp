#include <iostream>

#include "betrun/cli.hpp"

int main(int argc, char** argv) {
  return betrun::run_cli(argc, argv, std::cout, std::cerr);
}
