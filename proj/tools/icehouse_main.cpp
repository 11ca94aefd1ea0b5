#include <iostream>

#include "icehouse/cli.hpp"

int main(int argc, char** argv) { return icehouse::cli::run_cli(argc, argv, std::cout, std::cerr); }
