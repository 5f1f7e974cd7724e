#include <iostream>

#include "aggdist/cli.hpp"

int main(int argc, char** argv)
{
    return aggdist::cli::run(argc, argv, std::cout, std::cerr);
}
