#include <iostream>
#include <string>
#include <vector>

#include "xtrace/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return xtrace::cli::run(std::move(args), std::cout, std::cerr);
}
