#include "circleflow/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return circleflow::run_cli(argc, argv, std::cout, std::cerr); }
