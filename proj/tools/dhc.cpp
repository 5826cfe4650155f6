#include <iostream>

#include "dhc/cli.hpp"

int main(int argc, char** argv) { return dhc::cli_dispatch(argc, argv, std::cout, std::cerr); }
