#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace kronest::cli {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitIo = 2;

/// Parses the argument vector and runs one subcommand. Never throws; library
/// errors are reported on `err` and mapped to an exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

/// Aggregate of one metric over trials: mean and normal-approximation CI95.
struct Summary {
    double mean = 0.0;
    double ci95 = 0.0;
    std::size_t count = 0;
};
Summary summarize(const std::vector<double>& values);

/// SolverReport serialization used by `estimate`.
Json report_json(const SolverReport& rep);
Json kron_json(const KroneckerCov& r);

}  // namespace kronest::cli
