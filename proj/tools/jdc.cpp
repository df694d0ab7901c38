#include "jdc/cli.hpp"

#include <string>
#include <vector>

int main(int argc, char **argv) {
    const std::vector<std::string> args(argv, argv + argc);
    return jdc::cli::run_command(args);
}
