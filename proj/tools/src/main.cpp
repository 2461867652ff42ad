#include <iostream>

#include "scbal_cli/cli.hpp"

int main(int argc, char** argv) { return scbal::cli::dispatch(argc, argv, std::cout, std::cerr); }
