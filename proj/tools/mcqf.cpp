#include <iostream>

#include "mcqf/cli/cli.hpp"

int main(int argc, char** argv) {
  return mcqf::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
