#ifndef AAPU_COMMON_HPP
#define AAPU_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace aapu {

inline constexpr const char* kVersion = "0.1.0";

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Invalid user-facing configuration (bad spec, bad flag values).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Tensor/vector dimensions do not line up.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An internal API contract was violated (stale cache, mismatched state).
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Problems reading or parsing dataset files.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Training produced a non-finite objective.
struct NumericError : std::runtime_error {
    NumericError(const std::string& msg, unsigned epoch_)
        : std::runtime_error(msg), epoch(epoch_) {}
    unsigned epoch;
};

// splitmix64; used to derive independent per-epoch / per-purpose seeds
// from one user seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a over raw bytes; used for dataset fingerprints and exact
// feature-vector duplicate detection.
inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace aapu

#endif
