#include <iostream>

#include "gridcoord/cli.hpp"

int main(int argc, char** argv) {
  return gridcoord::cli::run(argc, argv, std::cout, std::cerr);
}
