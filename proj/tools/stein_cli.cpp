#include <iostream>

#include "stein/harness.hpp"

int main(int argc, char** argv) { return stein::run_cli(argc, argv, std::cout, std::cerr); }
