#pragma once

#include <cstdint>
#include <vector>

#include "fforms/core.hpp"

namespace fforms {

/// Stationary AR(1) with unit Gaussian innovations: y_t = rho * y_{t-1} + e_t.
/// The first value is drawn from the stationary law N(0, 1 / (1 - rho^2)).
HistorySeries simulate_ar1(double rho, std::size_t n, std::uint64_t seed);

/// Exact law of the next h values given the last observation.
struct Ar1Conditional {
    std::vector<double> mean;  // rho^k * y_T
    Matrix covariance;         // sum_{i <= min(j,k)} rho^(j-i) rho^(k-i)
};
Ar1Conditional ar1_conditional(double rho, double last, std::size_t h);

/// M paths continuing from `last`; path m uses Rng(seed, m).
TrajectoryEnsemble simulate_ar1_paths(double rho, double last, std::size_t h, std::size_t paths, std::uint64_t seed);

/// One exchangeable forecast window: a stationary origin and what followed it.
struct Ar1Window {
    double origin_value = 0.0;
    std::vector<double> realization;
    Ar1Conditional truth;
};

/// Independent windows; window i draws from Rng(seed, i).
std::vector<Ar1Window> simulate_ar1_windows(double rho, std::size_t h, std::size_t windows, std::uint64_t seed);

}  // namespace fforms
