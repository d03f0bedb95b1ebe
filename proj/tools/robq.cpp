#include <iostream>

#include "robq/cli.hpp"

int main(int argc, char** argv) { return robq::cli_dispatch(argc, argv, std::cout, std::cerr); }
