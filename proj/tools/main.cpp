// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "hpsim/cli.hpp"

int main(int argc, char** argv) { return hpsim::cli_main(argc, argv, std::cout, std::cerr); }
