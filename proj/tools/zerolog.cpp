#include <iostream>

#include "zerolog/cli.hpp"

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  return zerolog::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
