#include <iostream>

#include "thoughttree/cli.hpp"

int main(int argc, char** argv) {
  return thoughttree::run_cli(argc, argv, std::cout, std::cerr);
}
