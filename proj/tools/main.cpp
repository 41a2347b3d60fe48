#include <iostream>

#include "ktube/cli.hpp"

int main(int argc, char** argv) {
  return ktube::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
