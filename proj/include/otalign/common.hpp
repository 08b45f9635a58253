#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace otalign {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

enum class ErrorKind {
    Parse,
    Range,
    Shape,
    Config,
    Numerical,
    Checkpoint,
    Io,
    InvalidArgument,
};

// Single exception type for the library. The kind drives CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Derives independent per-component seeds from one root seed (splitmix64 finalizer).
constexpr std::uint64_t split_seed(std::uint64_t root, std::uint64_t stream) {
    std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace seed_stream {
inline constexpr std::uint64_t kAnchorSplit = 1;
inline constexpr std::uint64_t kEncoderInit = 2;
inline constexpr std::uint64_t kNoise = 3;
inline constexpr std::uint64_t kBatch = 4;
}  // namespace seed_stream

}  // namespace otalign
