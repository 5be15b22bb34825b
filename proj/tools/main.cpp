#include "geodesy/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return geodesy::cli::run(argc, argv, std::cout, std::cerr); }
