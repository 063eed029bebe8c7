#include <string>
#include <vector>

#include "impedance/cli.hpp"

int main(int argc, char** argv) {
  return impedance::cli::run(std::vector<std::string>(argv, argv + argc));
}
