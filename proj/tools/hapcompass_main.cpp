#include <iostream>

#include "hapcompass/app/cli.hpp"

int main(int argc, char** argv) { return hapcompass::app::run_cli(argc, argv, std::cout, std::cerr); }
