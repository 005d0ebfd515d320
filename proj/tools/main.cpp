// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "puflab/cli.hpp"

int main(int argc, char **argv) {
    return puflab::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
