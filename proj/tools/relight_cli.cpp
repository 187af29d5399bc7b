#include <iostream>

#include "relight/cli.hpp"

int main(int argc, char** argv) {
  return relight::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
