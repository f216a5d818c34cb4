#include <iostream>

#include "magnonlink/cli.hpp"

int main(int argc, char** argv) { return magnonlink::cli::run(argc, argv, std::cout, std::cerr); }
