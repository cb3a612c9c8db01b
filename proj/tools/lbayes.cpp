// SPDX-License-Identifier: Apache-2.0
#include "logitbayes/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
  std::vector<std::string> args(argv + 1, argv + argc);
  return logitbayes::run_cli(args, std::cout, std::cerr);
}
