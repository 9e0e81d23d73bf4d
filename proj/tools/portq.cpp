#include <iostream>

#include "portq/cli.hpp"

int main(int argc, char** argv) { return portq::cli::run(argc, argv, std::cout, std::cerr); }
