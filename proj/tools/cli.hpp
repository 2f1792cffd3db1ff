// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dexteach::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    // bad flags, invalid configuration or inputs
inline constexpr int kExitRuntime = 2;  // I/O, network or numerical failure

/// Entry point behind the `dexteach` binary; args excludes the program name.
/// Results go to `out`, the resolved configuration and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dexteach::cli
