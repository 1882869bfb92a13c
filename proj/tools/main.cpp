#include <iostream>
#include <string>
#include <vector>

#include "bigimage/cli_report.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return bigimage::run_cli(args, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bigimage::kExitVerification;
  }
}
