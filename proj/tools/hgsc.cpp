#include <iostream>
#include <string>
#include <vector>

#include "hgsc/cli.hpp"

int main(int argc, char** argv) {
  return hgsc::cli::Run(std::vector<std::string>(argv, argv + argc), std::cout,
                        std::cerr);
}
