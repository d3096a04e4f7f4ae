#include <iostream>

#include "cvent/commands.hpp"

int main(int argc, char** argv) { return cvent::cli::run(argc, argv, std::cout, std::cerr); }
