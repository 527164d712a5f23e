#include <iostream>

#include "isokam/cli.hpp"

int main(int argc, char** argv) { return isokam::run_cli(argc, argv, std::cout, std::cerr); }
