#include <string>
#include <vector>

#include "defkern/cli.hpp"

int main(int argc, char** argv) {
    return defkern::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
