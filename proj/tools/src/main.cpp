#include <iostream>

#include "cagan/cli.hpp"

int main(int argc, char** argv) {
  return cagan::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
