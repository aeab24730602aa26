#include <iostream>

#include "seqal/cli.hpp"

int main(int argc, char** argv) { return seqal::cli::main(argc, argv, std::cout, std::cerr); }
