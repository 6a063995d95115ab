#include <iostream>

#include "hyper/cli/cli.hpp"

int main(int argc, char** argv) { return hyper::cli::dispatch(argc, argv, std::cout, std::cerr); }
