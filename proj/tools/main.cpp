#include <iostream>
#include <string>
#include <vector>

#include "mixconv/cli.hpp"

int main(int argc, char** argv) {
  return mixconv::cli::run(std::vector<std::string>(argv, argv + argc),
                           std::cout, std::cerr);
}
