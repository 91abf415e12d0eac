#include <iostream>

#include "mvcnn/cli/cli.hpp"

int main(int argc, char** argv) { return mvcnn::cli::run(argc, argv, std::cout, std::cerr); }
