#include "subsel/cli.hpp"

int main(int argc, char** argv) {
  return subsel::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
