#include <iostream>

#include "pathsg/cli.hpp"

int main(int argc, char** argv) { return pathsg::cli_main(argc, argv, std::cout, std::cerr); }
