#include "shiftres/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return shiftres::cli::run(argc, argv, std::cout, std::cerr); }
