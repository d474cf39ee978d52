#include <vector>

#include "dpf/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return dpf::run_cli(args);
}
