#include <iostream>

#include "tabula/cli.hpp"

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  return tabula::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
