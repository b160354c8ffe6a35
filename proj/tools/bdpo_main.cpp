// SPDX-License-Identifier: Apache-2.0
#include <vector>
#include <string>

#include "bdpo/cli.hpp"

int main(int argc, char** argv) {
    return bdpo::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
