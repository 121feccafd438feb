#include "nemvis/pipeline.hpp"

#include <iostream>

int main(int argc, char** argv) { return nemvis::run_cli(argc, argv, std::cout, std::cerr); }
