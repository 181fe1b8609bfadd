#include <iostream>

#include "sdpc/cli.hpp"

int main(int argc, char** argv) { return sdpc::cli::main(argc, argv, std::cout, std::cerr); }
