#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fforms/copula.hpp"
#include "fforms/core.hpp"

namespace fforms {

enum class Statistic { mean, median };
Statistic parse_statistic(std::string_view name);

// ---- marginalization (trajectory -> simpler forms) ------------------------------

/// Inf-based weighted empirical quantiles per step; rows rearranged to be monotone.
QuantileForecast traj_to_quantile(const TrajectoryEnsemble& ens, std::span<const double> levels);
/// Per-step fit_mle; the empirical family yields empirical_cdf of each column.
ParametricForecast traj_to_parametric(const TrajectoryEnsemble& ens, Family family);
/// Weighted mean, or inf-based weighted median.
PointForecast traj_to_point(const TrajectoryEnsemble& ens, Statistic statistic);

// ---- lateral -------------------------------------------------------------------

QuantileForecast parametric_to_quantile(const ParametricForecast& f, std::span<const double> levels);
PointForecast parametric_to_point(const ParametricForecast& f, Statistic statistic);

// ---- lifting marginals to paths ---------------------------------------------------

struct TailPolicy {
    enum class Kind { none, gpd } kind = Kind::none;
    /// Levels where the GPD tails are fitted; defaults to the third-outermost
    /// grid level on each side.
    std::optional<double> lower_attach;
    std::optional<double> upper_attach;
};

struct LiftOptions {
    TailPolicy tails;
    /// Refuse (OutOfSupport) instead of clipping uniforms into the grid.
    bool strict_tails = false;
};

struct TrajectoryResult {
    TrajectoryEnsemble ensemble;
    /// Number of uniforms clipped into [q_1 + 1e-9, q_L - 1e-9] because an
    /// interpolant marginal had no tail model there.
    std::size_t clipped_draws = 0;
};

TrajectoryResult marginals_to_trajectory(const ParametricForecast& f, const CopulaSpec& copula, std::size_t paths,
                                         std::uint64_t seed, bool strict_tails = false);
/// Quantile input is first lifted through quantile_to_interpolated_cdf.
TrajectoryResult marginals_to_trajectory(const QuantileForecast& f, const CopulaSpec& copula, std::size_t paths,
                                         std::uint64_t seed, const LiftOptions& options = {});

// ---- quantile -> parametric ---------------------------------------------------------

/// Two-level Gaussian inversion: mu and sigma from Q(q1), Q(q2).
ParametricForecast quantile_to_parametric_moment_match(const QuantileForecast& f, std::pair<double, double> levels);

enum class WeightMode { equal, asymptotic };

struct RegressionFit {
    ParametricForecast forecast;
    /// Final weighted objective per step.
    std::vector<double> objective;
};

/// Weighted least squares between family quantiles and the grid, per step.
/// Asymptotic weights are [q(1-q)]^-1 f(Q(q))^2, recomputed from the previous
/// fit `iterations` times starting from the equal-weight solution.
RegressionFit quantile_to_parametric_regression(const QuantileForecast& f, Family family, WeightMode mode,
                                                int iterations = 3);

/// Monotone piecewise-linear interpolant per step, optionally with GPD tails.
ParametricForecast quantile_to_interpolated_cdf(const QuantileForecast& f, const TailPolicy& tails = {});

struct PointResult {
    PointForecast forecast;
    std::vector<std::string> warnings;
};

/// Median by grid interpolation at 0.5; mean by trapezoid over the grid plus
/// end caps (nearest-endpoint extension, or GPD tail means when requested).
PointResult quantile_to_point(const QuantileForecast& f, Statistic statistic, const TailPolicy& tails = {});

// ---- point -> probabilistic ------------------------------------------------------------

struct ConformalConfig {
    double alpha = 0.1;
    enum class Mode { per_step, pathwise_sup_norm } mode = Mode::per_step;
    std::vector<double> scale_weights;  // pathwise mode; empty = per-step median |residual|
};

/// Rank ceil((n + 1)(1 - alpha)) of n calibration scores; throws when it exceeds n.
std::size_t conformal_rank(std::size_t n, double alpha);

/// Per-step split conformal intervals f_k +- q_k.
IntervalSet point_to_intervals_conformal(const PointForecast& f, const CalibrationSet& cal,
                                         const ConformalConfig& cfg);
/// Simultaneous band f_k +- c * w_k with c the conformal quantile of sup-norm scores.
PathwiseBand point_to_band_conformal_pathwise(const PointForecast& f, const CalibrationSet& cal,
                                              const ConformalConfig& cfg);

enum class BootstrapMode {
    rows,     // whole calibration residual vectors (keeps within-window dependence)
    by_lead,  // independent draws from each lead's own pool
    pooled    // independent draws from all leads pooled together
};
BootstrapMode parse_bootstrap_mode(std::string_view name);

TrajectoryEnsemble point_to_trajectory_bootstrap(const PointForecast& f, const CalibrationSet& cal, std::size_t paths,
                                                 BootstrapMode mode, std::uint64_t seed);

/// Encodes per-step intervals as a two-level quantile document at alpha/2 and 1 - alpha/2.
QuantileForecast intervals_to_quantile(const HorizonMeta& meta, const IntervalSet& intervals, double alpha);

}  // namespace fforms
