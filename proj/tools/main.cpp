#include <iostream>

#include "microvol/cli.hpp"

int main(int argc, char** argv) { return microvol::run_cli(argc, argv, std::cout, std::cerr); }
