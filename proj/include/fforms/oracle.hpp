#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fforms/core.hpp"
#include "fforms/tasks.hpp"

namespace fforms {

/// Explicit joint distribution over a small grid of paths.
///
/// prob is flattened row-major over the support axes: the last step varies
/// fastest. Capped at horizon 4 and 8 support values per step.
struct DiscreteJoint {
    std::vector<std::vector<double>> support;
    std::vector<double> prob;

    std::size_t horizon() const noexcept { return support.size(); }
    std::size_t atoms() const noexcept { return prob.size(); }
    /// Path of atom a (digit expansion of the flat index).
    std::vector<double> path(std::size_t atom) const;
    bool operator==(const DiscreteJoint&) const = default;
};

inline constexpr std::size_t kOracleMaxHorizon = 4;
inline constexpr std::size_t kOracleMaxSupport = 8;

/// Throws InvalidInput on any violated invariant.
void validate_joint(const DiscreteJoint& j);

/// Product joint of independent per-step (value, prob) marginals.
DiscreteJoint independent_joint(const std::vector<std::vector<std::pair<double, double>>>& marginals);

/// (value, prob) list of step k, 0-based.
std::vector<std::pair<double, double>> marginalize(const DiscreteJoint& j, std::size_t step);

double enumerate_event_probability(const DiscreteJoint& j, const EventSpec& e);

/// Exact first-crossing law: survival S(1..h) and hitting masses P(tau = k).
SurvivalResult exact_survival(const DiscreteJoint& j, double threshold, Comparator c);

/// Distribution of the window sum, merged within 1e-9, ascending by value.
std::vector<std::pair<double, double>> exact_aggregate(const DiscreteJoint& j, std::span<const std::size_t> window);

/// i.i.d. paths by inverse CDF over the flattened atoms; path m uses Rng(seed, m).
TrajectoryEnsemble sample(const DiscreteJoint& j, std::size_t paths, std::uint64_t seed);

}  // namespace fforms
