#include <iostream>
#include <string>
#include <vector>

#include "lnprobe/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return lnprobe::cli::run(args, std::cout, std::cerr);
}
