// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "diet/cli.hpp"

int main(int argc, char** argv) { return diet::run_cli(argc, argv, std::cout, std::cerr); }
