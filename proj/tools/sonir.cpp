#include <iostream>

#include "sonir/cli.hpp"

int main(int argc, char** argv) { return sonir::cli_main(argc, argv, std::cout, std::cerr); }
