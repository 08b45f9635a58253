#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "otalign/common.hpp"
#include "otalign/graph.hpp"

namespace otalign::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

int exit_code_for(ErrorKind kind);

struct AlignArgs {
    std::filesystem::path config;
    std::optional<std::string> mode;
    int threads = 1;
};

struct EvaluateArgs {
    std::filesystem::path plan;
    std::filesystem::path anchors;
    std::vector<int> ks{1, 10};
    bool pessimistic = false;
    std::optional<std::filesystem::path> out_dir;
};

struct PerturbArgs {
    std::filesystem::path in;
    NoiseKind kind = NoiseKind::Structural;
    double percent = 0.0;
    std::uint64_t seed = 0;
    std::filesystem::path out;
};

/// Loads data, splits anchors, trains, and writes all artifacts into a fresh
/// per-run directory under the config's output_dir. Prints the run directory
/// on success.
int cmd_align(const AlignArgs& args, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err);
int cmd_perturb(const PerturbArgs& args, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a subcommand.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace otalign::cli
