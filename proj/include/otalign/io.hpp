#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "otalign/common.hpp"
#include "otalign/encoder.hpp"

namespace otalign {

// Binary checkpoints (little-endian):
//
//   plan:  "OTALPLAN" | u32 version | u32 0 | u64 rows | u64 cols | rows*cols f64 (row-major)
//   model: "OTALMODL" | u32 version | u32 0 | u64 in_dim | u64 hidden | u64 out | i64 step |
//          f64 lambda | weights | first moment | second moment
//
// where each weight block is w1 (in_dim x hidden), b1, w2 (hidden x out), b2,
// matrices row-major. Every checkpoint gets a "<name>.json" metadata sidecar.
inline constexpr std::string_view kPlanMagic = "OTALPLAN";
inline constexpr std::string_view kModelMagic = "OTALMODL";
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_plan(const Matrix& plan, const std::filesystem::path& path);
/// Throws ErrorKind::Checkpoint on bad magic, version, or size.
Matrix read_plan(const std::filesystem::path& path);

struct ModelCheckpoint {
    EncoderParams params;
    double lambda = 0.0;
};

void write_model(const ModelCheckpoint& model, const std::filesystem::path& path);
ModelCheckpoint read_model(const std::filesystem::path& path);

/// Comma-separated rows with full double precision.
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Writes to a temporary sibling then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace otalign
