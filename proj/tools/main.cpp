#include <string>
#include <vector>

#include "powalloc/cli.hpp"

int main(int argc, char** argv) {
  return powalloc::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
