#include <iostream>
#include <string>
#include <vector>

#include "codetopics/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return codetopics::cli::run(args, std::cout, std::cerr);
}
