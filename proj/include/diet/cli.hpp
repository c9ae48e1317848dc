// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace diet {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;  // NaN abort, convergence failure, I/O
inline constexpr int kExitUsage = 2;    // bad flags, bad config, missing inputs

/// Entry point of `diet-lab <gen-data|train|probe|theory> [flags]`.
/// `--config FILE` loads a resolved config first; flags given alongside it
/// override individual fields.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace diet
