#include <string>
#include <vector>

#include "ssce/cli.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return ssce::run_cli(args);
}
