#include <iostream>

#include "bacon/cli.hpp"

int main(int argc, char** argv) { return bacon::run_cli(argc, argv, std::cout, std::cerr); }
