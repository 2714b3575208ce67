#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "fforms/core.hpp"

namespace fforms {

namespace copula {

struct Independence {};
struct Comonotonic {};
/// u2 = 1 - u1; exists only for h = 2.
struct Countermonotonic {};
/// Gaussian copula with R[i][j] = rho^|i-j|.
struct GaussianAr1 {
    double rho = 0.0;
};
struct GaussianFull {
    Matrix correlation;
};
struct StudentT {
    Matrix correlation;
    double nu = 4.0;
};

enum class EccVariant { q, r };

/// Ensemble copula coupling: impose the per-step rank pattern of a reference
/// ensemble on independent uniforms. Output row m takes its ranks from
/// reference row r(m):
///   R: r is a seeded random permutation of the reference rows, cycled when M
///      exceeds the reference size;
///   Q: reference rows sorted by their step-1 value, taken at evenly spaced
///      positions floor((m + 0.5) * N / M).
/// Within each step the M uniforms are sorted and handed out in the order of
/// the matched reference values (ties broken by output row index).
struct Ecc {
    TrajectoryEnsemble reference;
    EccVariant variant = EccVariant::r;
};

}  // namespace copula

using CopulaSpec = std::variant<copula::Independence, copula::Comonotonic, copula::Countermonotonic,
                                copula::GaussianAr1, copula::GaussianFull, copula::StudentT, copula::Ecc>;

/// Short name as used in JSON ("independence", "gaussian_ar1", ...).
std::string copula_name(const CopulaSpec& spec);
/// Human-readable description recorded in provenance, e.g. "gaussian_ar1(rho=0.8)".
std::string describe(const CopulaSpec& spec);

/// Throws InvalidInput when the spec cannot be used at horizon h.
void validate_copula(const CopulaSpec& spec, std::size_t h);

/// AR(1) correlation matrix R[i][j] = rho^|i-j|.
Matrix ar1_correlation(double rho, std::size_t h);

/// M x h matrix of uniforms in (0, 1) drawn from the copula; row m uses
/// substream (seed, m).
Matrix sample_copula(const CopulaSpec& spec, std::size_t paths, std::size_t h, std::uint64_t seed);

}  // namespace fforms
