// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mores::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitStale = 4;

/// Runs one command line (without the program name). Normal output goes to
/// `out`; failures print a single "error: ..." line to `err` and return the
/// matching exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mores::cli
