// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace puflab::cli {

inline constexpr const char *kToolVersion = "0.1.0";

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kValidation = 2,
    kProtocolFailure = 3,
    kIo = 4,
};

/// Runs one command line (without the program name). Output and
/// diagnostics go to \p out and \p err; the return value is the exit status.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace puflab::cli
