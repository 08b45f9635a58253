#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "otalign/graph.hpp"
#include "otalign/trainer.hpp"

namespace otalign {

/// A full alignment run as described by a JSON config file.
///
/// Required keys: edges1, edges2, anchors, alpha, beta, gamma_p, lr, epochs,
/// inner_steps, T, N, tol, seed, train_ratio, output_dir.
/// Optional keys: attrs1, attrs2, mode (full | fixed-cost | collapse | noise),
/// noise_kind (structural | attribute), noise_p, batch_size, hidden.
/// Unknown keys are rejected. Relative paths resolve against the config file's
/// directory.
struct RunConfig {
    DatasetPaths data;
    TrainConfig train;
    double train_ratio = 0.2;
    std::filesystem::path output_dir;
    std::string mode = "full";
    NoiseKind noise_kind = NoiseKind::Structural;
    double noise_p = 0.0;
    nlohmann::json snapshot;

    /// Applies a run mode name, including "noise" (full training on a perturbed G2).
    void set_mode(const std::string& name);
};

RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

}  // namespace otalign
