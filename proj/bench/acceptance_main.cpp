#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "acceptance.hpp"

// Usage: acceptance [id ...]
int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::err);
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  return topo::acceptance::run(only, std::cout) ? 0 : 1;
}
