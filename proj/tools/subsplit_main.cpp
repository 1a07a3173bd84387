#include <iostream>

#include "subsplit/cli.hpp"
#include "subsplit/log.hpp"

int main(int argc, char** argv) {
  subsplit::init_logging();
  return subsplit::run_cli(argc, argv, std::cout, std::cerr);
}
