#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fforms/dists.hpp"

namespace fforms {

struct HorizonMeta {
    std::int64_t origin = 0;
    std::size_t horizon = 1;
    std::vector<std::string> step_labels;  // empty or exactly `horizon` entries
    bool operator==(const HorizonMeta&) const = default;
};

/// Dense row-major matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    /// Throws InvalidInput on ragged rows.
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::vector<double> column(std::size_t c) const;
    std::vector<std::vector<double>> to_rows() const;
    const std::vector<double>& data() const noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct PointForecast {
    HorizonMeta meta;
    std::vector<double> values;
    bool operator==(const PointForecast&) const = default;
};

/// Levels are shared by every step; values is h x L.
struct QuantileForecast {
    HorizonMeta meta;
    std::vector<double> levels;
    Matrix values;
    bool operator==(const QuantileForecast&) const = default;
};

/// One parameter record per step, all of the same family.
struct ParametricForecast {
    HorizonMeta meta;
    Family family = Family::gaussian;
    std::vector<FamilyParams> params;
    bool operator==(const ParametricForecast&) const = default;
};

/// M x h paths; weights empty means uniform 1/M.
struct TrajectoryEnsemble {
    HorizonMeta meta;
    Matrix paths;
    std::vector<double> weights;

    std::size_t size() const noexcept { return paths.rows(); }
    double weight(std::size_t m) const {
        return weights.empty() ? 1.0 / static_cast<double>(paths.rows()) : weights[m];
    }
    bool operator==(const TrajectoryEnsemble&) const = default;
};

using ForecastDocument = std::variant<PointForecast, QuantileForecast, ParametricForecast, TrajectoryEnsemble>;

enum class ForecastKind { point, quantile, parametric, trajectory };

ForecastKind kind_of(const ForecastDocument& doc);
std::string_view kind_name(ForecastKind kind);
ForecastKind parse_kind(std::string_view name);
const HorizonMeta& meta_of(const ForecastDocument& doc);

struct HistorySeries {
    std::vector<double> values;
};

struct ForecastOutcome {
    ForecastDocument forecast;
    std::vector<double> realization;
};

/// Past forecasts paired with what happened; also the shape of an evaluation batch.
struct CalibrationSet {
    std::vector<ForecastOutcome> records;
};

struct Violation {
    std::string field;
    std::optional<std::size_t> index;
    std::string message;
};

/// Invariant check; never repairs. Empty result means valid.
std::vector<Violation> validate(const ForecastDocument& doc);
std::vector<Violation> validate(const HistorySeries& history);
std::vector<Violation> validate(const CalibrationSet& cal);
/// Throws InvalidInput carrying the first violation.
void require_valid(const ForecastDocument& doc);
void require_valid(const CalibrationSet& cal);

/// Ascending sort of one step's quantile values. Throws on non-finite input.
std::vector<double> rearrange_monotone(std::span<const double> values);

/// Weighted empirical distribution of a sample, sorted ascending.
class EmpiricalDistribution {
public:
    EmpiricalDistribution() = default;
    /// Empty weights means uniform. Weights must be non-negative with positive sum;
    /// they are normalized internally.
    EmpiricalDistribution(std::span<const double> values, std::span<const double> weights = {});

    std::size_t size() const noexcept { return values_.size(); }
    const std::vector<double>& values() const noexcept { return values_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    /// inf{y : F(y) >= q} for q in [0, 1]; cumulative sums compared with 1e-12 slack
    /// so that e.g. q = 0.5 on four equal atoms lands on the second value.
    double quantile(double q) const;
    double cdf(double x) const;       // F(x)   = P(Y <= x)
    double cdf_left(double x) const;  // F(x-)  = P(Y <  x)
    double mean() const;
    /// Midpoint of the lower and upper medians (e.g. 1 for {0, 2}).
    double midpoint_median() const;

private:
    std::vector<double> values_;
    std::vector<double> weights_;
    std::vector<double> cumulative_;
};

/// Per-step [lower, upper] intervals.
struct IntervalSet {
    std::vector<double> lower;
    std::vector<double> upper;
};

/// Simultaneous band m_k +- c * s_k.
struct PathwiseBand {
    std::vector<double> center;
    std::vector<double> scale;
    double multiplier = 0.0;
    std::vector<double> lower;
    std::vector<double> upper;

    bool contains(std::span<const double> path) const;
};

}  // namespace fforms
