// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0

#include <string>
#include <vector>

#include "dvdlens/cli.hpp"

int main(int argc, char** argv) {
    return dvdlens::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
