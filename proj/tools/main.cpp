#include <iostream>

#include "mrverb/cli.hpp"

int main(int argc, char** argv) {
    return mrverb::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
