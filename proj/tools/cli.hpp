// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#pragma once

#include <atomic>
#include <iosfwd>
#include <string>
#include <vector>

namespace envsynth::cli {

enum ExitCode : int {
  kOk = 0,
  kVerdictFail = 1,
  kInputError = 2,
  kEnvironmentError = 3,
  kReplayError = 4,
  kUsage = 64,
};

/// Runs one command line (without the program name). `in`/`out` back the
/// standard-stream transport and command output; diagnostics go to `err`.
/// `stop` ends a TCP serve loop when set.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err, const std::atomic<bool>* stop = nullptr);

}  // namespace envsynth::cli
