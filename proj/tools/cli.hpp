// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace reneg::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kConfig = 3 };

/// Entry point of `reneg`. Errors are reported as a single line on `err`:
///   reneg: error kind=<usage|config|runtime> [field=<key>] message="..."
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace reneg::cli
