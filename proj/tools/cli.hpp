#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "feedbias/records.hpp"

namespace feedbias::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command. args excludes the program name, e.g. {"simulate", "--sessions", "10"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Session-level split: a session goes to the test side when
/// hash_combine(seed, session_id) falls in the lowest test_fraction of buckets.
std::pair<Dataset, Dataset> split_train_test(const Dataset& dataset, std::uint64_t seed,
                                             double test_fraction);

}  // namespace feedbias::cli
