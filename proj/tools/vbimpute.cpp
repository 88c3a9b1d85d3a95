#include <iostream>

#include "vbmi/cli.hpp"

int main(int argc, char** argv) { return vbmi::cli::run(argc, argv, std::cout, std::cerr); }
