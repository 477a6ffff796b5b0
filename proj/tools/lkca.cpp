// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "lkca/cli.hpp"

int main(int argc, char** argv) { return lkca::cli::run(argc, argv, std::cout, std::cerr); }
