#include "lpdm/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return lpdm::run_cli(argc, argv, std::cout, std::cerr); }
