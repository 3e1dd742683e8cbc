#include <iostream>

#include "vtmm/cli.hpp"

int main(int argc, char** argv) {
  return vtmm::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
