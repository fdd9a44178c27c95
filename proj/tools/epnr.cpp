#include <iostream>

#include "epnr/config.hpp"

int main(int argc, char** argv) { return epnr::cli_main(argc, argv, std::cout, std::cerr); }
