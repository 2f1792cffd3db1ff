// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  return dexteach::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
