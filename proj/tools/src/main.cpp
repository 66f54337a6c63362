// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "demon_cli/commands.hpp"

int main(int argc, char** argv) { return demon::cli::run(argc, argv, std::cout, std::cerr); }
