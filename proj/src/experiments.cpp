#include "fforms/experiments.hpp"

#include <cmath>

#include "fforms/convert.hpp"
#include "fforms/errors.hpp"
#include "fforms/metrics.hpp"
#include "fforms/rng.hpp"
#include "fforms/synth.hpp"
#include "fforms/tasks.hpp"

namespace fforms {

namespace {

struct Accumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t n = 0;
    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++n;
    }
    double mean() const { return sum / static_cast<double>(n); }
    double se() const {
        const double m = mean();
        const double var = (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
        return std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
    }
};

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    Rng rng(seed, streams::kAuxBase + 0x100 + index);
    return rng();
}

DependenceReport dependence_experiment(double rho, std::size_t h, std::size_t paths, std::size_t windows,
                                       std::uint64_t seed) {
    if (windows < 2) throw InvalidInput("dependence experiment needs at least 2 windows");
    if (h < 2) throw InvalidInput("dependence experiment needs h >= 2");
    const auto sample = simulate_ar1_windows(rho, h, windows, seed);
    Accumulator crps_t;
    Accumulator crps_i;
    Accumulator energy_d;
    Accumulator vario_d;
    double energy_t = 0.0;
    double energy_i = 0.0;
    double vario_t = 0.0;
    double vario_i = 0.0;
    for (std::size_t w = 0; w < windows; ++w) {
        const auto& win = sample[w];
        const auto truth = simulate_ar1_paths(rho, win.origin_value, h, paths, derive_seed(seed, 2 * w));
        ParametricForecast marg;
        marg.meta.horizon = h;
        marg.family = Family::gaussian;
        for (std::size_t k = 0; k < h; ++k) {
            marg.params.push_back(Gaussian{win.truth.mean[k], std::sqrt(win.truth.covariance(k, k))});
        }
        const auto indep =
            marginals_to_trajectory(marg, copula::Independence{}, paths, derive_seed(seed, 2 * w + 1)).ensemble;
        const auto ct = crps(truth, win.realization).mean;
        const auto ci = crps(indep, win.realization).mean;
        crps_t.add(ct);
        crps_i.add(ci);
        const double et = energy_score(truth, win.realization);
        const double ei = energy_score(indep, win.realization);
        const double vt = variogram_score(truth, win.realization, VariogramWeights::uniform);
        const double vi = variogram_score(indep, win.realization, VariogramWeights::uniform);
        energy_t += et;
        energy_i += ei;
        vario_t += vt;
        vario_i += vi;
        energy_d.add(ei - et);
        vario_d.add(vi - vt);
    }
    const double n = static_cast<double>(windows);
    DependenceReport r;
    r.windows = windows;
    r.crps_true = crps_t.mean();
    r.crps_indep = crps_i.mean();
    r.crps_relative_gap = std::abs(r.crps_indep - r.crps_true) / r.crps_true;
    r.energy_true = energy_t / n;
    r.energy_indep = energy_i / n;
    r.energy_paired_se = energy_d.se();
    r.variogram_true = vario_t / n;
    r.variogram_indep = vario_i / n;
    r.variogram_paired_se = vario_d.se();
    return r;
}

PersistenceReport persistence_experiment(double rho, double last, double threshold, std::size_t h, std::size_t paths,
                                         std::size_t reference_paths, std::uint64_t seed, std::uint64_t reference_seed) {
    const auto truth = ar1_conditional(rho, last, h);
    ParametricForecast marg;
    marg.meta.horizon = h;
    marg.family = Family::gaussian;
    for (std::size_t k = 0; k < h; ++k) marg.params.push_back(Gaussian{truth.mean[k], std::sqrt(truth.covariance(k, k))});

    PersistenceReport r;
    r.threshold = threshold;
    r.independence = survival_from_marginals(marg, threshold, Comparator::ge).curve.survival;
    r.trajectory =
        survival_from_trajectories(simulate_ar1_paths(rho, last, h, paths, seed), threshold, Comparator::ge).curve.survival;
    r.reference = survival_from_trajectories(simulate_ar1_paths(rho, last, h, reference_paths, reference_seed), threshold,
                                             Comparator::ge)
                      .curve.survival;
    for (std::size_t k = 0; k < h; ++k) {
        r.max_independence_gap = std::max(r.max_independence_gap, std::abs(r.independence[k] - r.trajectory[k]));
        r.max_reference_gap = std::max(r.max_reference_gap, std::abs(r.trajectory[k] - r.reference[k]));
    }
    return r;
}

}  // namespace fforms
