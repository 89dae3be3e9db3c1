#include <iostream>

#include <afr/cli.hpp>

int main(int argc, char** argv) { return afr::run_cli(argc, argv, std::cout, std::cerr); }
