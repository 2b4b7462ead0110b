#include <iostream>

#include "fairnorm/cli.hpp"

int main(int argc, char** argv) {
  return fairnorm::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
