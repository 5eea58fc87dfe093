#include "ikeusb/cli.hpp"

#include <iostream>

int main(int argc, char **argv)
{
    return ikeusb::cli::run_cli(argc, argv, std::cout, std::cerr);
}
