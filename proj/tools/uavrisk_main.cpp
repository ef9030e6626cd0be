#include "app.hpp"

#include <iostream>

int main(int argc, char** argv) { return uavrisk::app::run_cli(argc, argv, std::cout, std::cerr); }
