#include <iostream>

#include "agsfh/cli/commands.hpp"

int main(int argc, char** argv) {
  return agsfh::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
