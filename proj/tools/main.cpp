#include <iostream>

#include "mortfrac/cli.hpp"

int main(int argc, char** argv) { return mortfrac::run_cli(argc, argv, std::cout, std::cerr); }
