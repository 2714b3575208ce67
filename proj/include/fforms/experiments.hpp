#pragma once

#include <cstdint>
#include <vector>

namespace fforms {

/// True-joint AR(1) ensembles vs ensembles with the same Gaussian marginals
/// coupled independently, scored on the same realized windows.
struct DependenceReport {
    std::size_t windows = 0;
    double crps_true = 0.0;    // mean over windows and steps
    double crps_indep = 0.0;
    double crps_relative_gap = 0.0;  // |indep - true| / true
    double energy_true = 0.0;
    double energy_indep = 0.0;
    double energy_paired_se = 0.0;  // SE of the mean per-window difference
    double variogram_true = 0.0;
    double variogram_indep = 0.0;
    double variogram_paired_se = 0.0;

    double energy_z() const { return (energy_indep - energy_true) / energy_paired_se; }
    double variogram_z() const { return (variogram_indep - variogram_true) / variogram_paired_se; }
};

DependenceReport dependence_experiment(double rho, std::size_t h, std::size_t paths, std::size_t windows,
                                       std::uint64_t seed);

/// First crossing above `threshold` from y_T = last for an AR(1) path: the
/// independence-approximation survival curve, a trajectory estimate with
/// `paths` paths, and a reference estimate with `reference_paths` paths drawn
/// from an unrelated seed.
struct PersistenceReport {
    double threshold = 0.0;
    std::vector<double> independence;
    std::vector<double> trajectory;
    std::vector<double> reference;
    double max_independence_gap = 0.0;  // max_k |independence - trajectory|
    double max_reference_gap = 0.0;     // max_k |trajectory - reference|
};

PersistenceReport persistence_experiment(double rho, double last, double threshold, std::size_t h, std::size_t paths,
                                         std::size_t reference_paths, std::uint64_t seed, std::uint64_t reference_seed);

/// Seed for the i-th independent sub-experiment of a seeded run.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace fforms
