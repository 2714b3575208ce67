#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fforms/core.hpp"

namespace fforms {

// ---- point errors ------------------------------------------------------------------

struct PointErrors {
    double mae = 0.0;
    double mse = 0.0;
    std::optional<double> mase;  // present when a training series was given
};

/// MASE scales MAE by the in-sample one-step naive MAE of the training series.
PointErrors point_errors(const CalibrationSet& batch, const HistorySeries* training = nullptr);
double naive_mae(std::span<const double> training);

// ---- marginal scores --------------------------------------------------------------------

/// Non-negative pinball loss (y - Q)(q - 1{y < Q}).
double pinball(double predicted, double y, double level);
/// Mean pinball over steps and levels (no interval-score reweighting).
double wis(const QuantileForecast& f, std::span<const double> realization);

struct CrpsResult {
    std::vector<double> per_step;
    double mean = 0.0;
    bool approximate = false;
};

double crps_gaussian(double mu, double sigma, double y);
/// Closed form; requires nu > 1.
double crps_student_t(double mu, double sigma, double nu, double y);
/// (sum w|x - y|) - 0.5 sum sum w w' |x - x'| in O(M log M).
double crps_ensemble(std::span<const double> members, double y, std::span<const double> weights = {});
/// 2 * sum_l width_l * pinball(Q_l, y, q_l), widths from the midpoints between levels.
double crps_quantile_grid(std::span<const double> levels, std::span<const double> values, double y);
/// CRPS of one marginal; exact for gaussian/student_t/empirical, quadrature for spliced tails.
/// Uncovered probability of an interpolant is treated as atoms at its end values.
double crps_marginal(const FamilyParams& params, double y);

/// Point forecasts are rejected (Unsupported).
CrpsResult crps(const ForecastDocument& f, std::span<const double> realization);

double log_score(const ParametricForecast& f, std::span<const double> realization);

// ---- path scores --------------------------------------------------------------------------

double energy_score(const TrajectoryEnsemble& ens, std::span<const double> realization);

enum class VariogramWeights { uniform, inverse_lag };
VariogramWeights parse_variogram_weights(std::string_view name);
double variogram_score(const TrajectoryEnsemble& ens, std::span<const double> realization, VariogramWeights preset);
/// Explicit weights: only entries with t < t' are used.
double variogram_score(const TrajectoryEnsemble& ens, std::span<const double> realization, const Matrix& weights);

// ---- event scores ---------------------------------------------------------------------------

double brier(std::span<const double> predictions, std::span<const int> outcomes);

/// survival is n x h (row i = S_i(1..h)); hitting_times[i] in 1..h, or nullopt when censored.
double integrated_brier(const Matrix& survival, std::span<const std::optional<std::size_t>> hitting_times);

// ---- calibration diagnostics -------------------------------------------------------------------

struct PitValue {
    double value = 0.5;
    bool clipped = false;
};

/// Randomized PIT of y under the step-k marginal; u in (0, 1) randomizes atoms.
PitValue pit_value(const ForecastDocument& f, std::size_t step, double y, double u);

struct PitResult {
    std::vector<double> values;
    std::size_t clipped = 0;
    double ks_distance = 0.0;
};

/// Record i draws its randomization from substream (seed, i).
PitResult pit_values(const CalibrationSet& batch, std::size_t step, std::uint64_t seed);
/// sup_u |F_n(u) - u| of a sample on [0, 1].
double ks_uniform(std::span<const double> values);

struct ReliabilityBin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
    std::optional<double> mean_prediction;  // undefined for empty bins
    std::optional<double> frequency;
};

struct ReliabilityTable {
    std::vector<ReliabilityBin> bins;
};

ReliabilityTable reliability(std::span<const double> predictions, std::span<const int> outcomes, std::size_t bins);

enum class CoverageMode { pointwise, simultaneous };
CoverageMode parse_coverage_mode(std::string_view name);
/// intervals[i] pairs with realizations[i].
double coverage(std::span<const IntervalSet> intervals, std::span<const std::vector<double>> realizations,
                CoverageMode mode);

// ---- metric / forecast-type compatibility --------------------------------------------------------

enum class Metric { mae, mse, mase, wis, crps, log_score, energy, variogram, brier, ibs, pit, coverage };
Metric parse_metric(std::string_view name);
std::string_view metric_name(Metric m);
/// Throws Unsupported, naming why, when the metric cannot score this forecast type.
void require_metric_support(Metric m, ForecastKind kind);

}  // namespace fforms
