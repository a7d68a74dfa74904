#include <iostream>
#include <string>
#include <vector>

#include "dqs/pipeline.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dqs::dispatch(args, std::cout, std::cerr);
}
