// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace histcolor::cli {

/// Runs the `histcolor` command line. Errors are reported on `err` as one
/// line `error: <CODE>: <message>` and mapped to a nonzero exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace histcolor::cli
