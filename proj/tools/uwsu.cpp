#include <iostream>

#include "uwsu/cli/cli.hpp"

int main(int argc, char** argv) { return uwsu::cli::run(argc, argv, std::cout, std::cerr); }
