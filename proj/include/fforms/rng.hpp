#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>

namespace fforms {

/// xoshiro256** generator keyed by (seed, stream).
///
/// Every Monte Carlo loop in the library draws path m from Rng(seed, m), so
/// results do not depend on execution order or thread count. Variates are
/// produced by inversion or by explicitly coded algorithms rather than the
/// std:: distributions, whose output is implementation-defined; this keeps
/// output bit-identical across standard libraries.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept;
    /// Standard normal by inversion.
    double normal() noexcept;
    /// Gamma(shape, 1) by Marsaglia-Tsang.
    double gamma(double shape) noexcept;
    double chi_squared(double dof) noexcept { return 2.0 * gamma(0.5 * dof); }
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) noexcept;

private:
    std::uint64_t state_[4];
};

/// Stream identifiers reserved for auxiliary randomness (permutations,
/// initializations) so they never collide with per-path streams 0..M-1.
namespace streams {
inline constexpr std::uint64_t kAuxBase = 0xF0F0000000000000ULL;
inline constexpr std::uint64_t kEccPermutation = kAuxBase + 1;
inline constexpr std::uint64_t kClusterInit = kAuxBase + 2;
inline constexpr std::uint64_t kPit = kAuxBase + 3;
inline constexpr std::uint64_t kSynthHistory = kAuxBase + 4;
}  // namespace streams

}  // namespace fforms
