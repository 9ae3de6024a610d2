#include <iostream>

#include "crimegnn/cli.hpp"

int main(int argc, char** argv) {
  return crimegnn::cli::cli_main(argc, argv, std::cout, std::cerr);
}
