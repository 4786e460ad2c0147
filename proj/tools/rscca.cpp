#include <iostream>

#include "rscca/cli.hpp"

int main(int argc, char** argv) { return rscca::run_cli(argc, argv, std::cout, std::cerr); }
