#include <iostream>

#include "otalign/cli.hpp"

int main(int argc, char** argv) {
    return otalign::cli::run(argc, argv, std::cout, std::cerr);
}
