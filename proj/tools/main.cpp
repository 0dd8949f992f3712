#include <string>
#include <vector>

#include "dtwin/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dtwin::run_cli(args);
}
