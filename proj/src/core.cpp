#include "fforms/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fforms/errors.hpp"

namespace fforms {

namespace {

constexpr double kCumulativeSlack = 1e-12;

void check_meta(const HorizonMeta& meta, std::vector<Violation>& out) {
    if (meta.horizon < 1) out.push_back({"horizon", std::nullopt, "horizon must be >= 1"});
    if (!meta.step_labels.empty() && meta.step_labels.size() != meta.horizon) {
        out.push_back({"step_labels", std::nullopt, "step_labels length differs from horizon"});
    }
}

void check_point(const PointForecast& f, std::vector<Violation>& out) {
    if (f.values.size() != f.meta.horizon) {
        out.push_back({"values", std::nullopt, "values length differs from horizon"});
    }
    for (std::size_t k = 0; k < f.values.size(); ++k) {
        if (!std::isfinite(f.values[k])) out.push_back({"values", k, "non-finite value at step " + std::to_string(k)});
    }
}

void check_quantile(const QuantileForecast& f, std::vector<Violation>& out) {
    const auto& q = f.levels;
    if (q.empty()) out.push_back({"levels", std::nullopt, "no quantile levels"});
    for (std::size_t l = 0; l < q.size(); ++l) {
        if (!(q[l] > 0.0 && q[l] < 1.0)) {
            out.push_back({"levels", l, "level outside (0, 1) at index " + std::to_string(l)});
        }
        if (l > 0 && !(q[l] > q[l - 1])) {
            out.push_back({"levels", l, "levels not ascending at index " + std::to_string(l)});
        }
    }
    if (f.values.rows() != f.meta.horizon) {
        out.push_back({"values", std::nullopt, "values row count differs from horizon"});
    }
    if (f.values.cols() != q.size()) {
        out.push_back({"values", std::nullopt, "values column count differs from number of levels"});
        return;
    }
    for (std::size_t k = 0; k < f.values.rows(); ++k) {
        bool finite = true;
        for (std::size_t l = 0; l < q.size(); ++l) {
            if (!std::isfinite(f.values(k, l))) {
                out.push_back({"values", k, "non-finite value at step " + std::to_string(k)});
                finite = false;
                break;
            }
        }
        if (!finite) continue;
        for (std::size_t l = 1; l < q.size(); ++l) {
            if (f.values(k, l) < f.values(k, l - 1)) {
                out.push_back({"values", k, "quantile crossing at step " + std::to_string(k)});
                break;
            }
        }
    }
}

void check_parametric(const ParametricForecast& f, std::vector<Violation>& out) {
    if (f.params.size() != f.meta.horizon) {
        out.push_back({"params", std::nullopt, "params length differs from horizon"});
    }
    for (std::size_t k = 0; k < f.params.size(); ++k) {
        if (family_of(f.params[k]) != f.family) {
            out.push_back({"params", k, "family mismatch at step " + std::to_string(k)});
            continue;
        }
        for (const auto& issue : check_params(f.params[k])) {
            out.push_back({"params", k, issue + " at step " + std::to_string(k)});
        }
    }
}

void check_trajectory(const TrajectoryEnsemble& f, std::vector<Violation>& out) {
    if (f.paths.rows() < 1) out.push_back({"paths", std::nullopt, "ensemble needs at least one path"});
    if (f.paths.cols() != f.meta.horizon) {
        out.push_back({"paths", std::nullopt, "path length differs from horizon"});
    }
    for (std::size_t m = 0; m < f.paths.rows(); ++m) {
        for (double v : f.paths.row(m)) {
            if (!std::isfinite(v)) {
                out.push_back({"paths", m, "non-finite value in path " + std::to_string(m)});
                break;
            }
        }
    }
    if (!f.weights.empty()) {
        if (f.weights.size() != f.paths.rows()) {
            out.push_back({"weights", std::nullopt, "weights length differs from path count"});
        }
        double total = 0.0;
        for (std::size_t m = 0; m < f.weights.size(); ++m) {
            if (!(f.weights[m] >= 0.0) || !std::isfinite(f.weights[m])) {
                out.push_back({"weights", m, "negative or non-finite weight at index " + std::to_string(m)});
            }
            total += f.weights[m];
        }
        if (std::abs(total - 1.0) > 1e-9) out.push_back({"weights", std::nullopt, "weights do not sum to 1"});
    }
}

[[noreturn]] void throw_violation(const std::vector<Violation>& v) {
    throw InvalidInput("invalid document: " + v.front().message);
}

}  // namespace

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols_) {
            throw InvalidInput("ragged matrix: row " + std::to_string(r) + " has " +
                               std::to_string(rows[r].size()) + " entries, expected " + std::to_string(m.cols_));
        }
        std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
}

std::vector<double> Matrix::column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
    std::vector<std::vector<double>> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r].assign(row(r).begin(), row(r).end());
    return out;
}

ForecastKind kind_of(const ForecastDocument& doc) { return static_cast<ForecastKind>(doc.index()); }

std::string_view kind_name(ForecastKind kind) {
    switch (kind) {
        case ForecastKind::point: return "point";
        case ForecastKind::quantile: return "quantile";
        case ForecastKind::parametric: return "parametric";
        case ForecastKind::trajectory: return "trajectory";
    }
    return "unknown";
}

ForecastKind parse_kind(std::string_view name) {
    if (name == "point") return ForecastKind::point;
    if (name == "quantile") return ForecastKind::quantile;
    if (name == "parametric") return ForecastKind::parametric;
    if (name == "trajectory") return ForecastKind::trajectory;
    throw InvalidInput("unknown forecast type '" + std::string(name) + "'");
}

const HorizonMeta& meta_of(const ForecastDocument& doc) {
    return std::visit([](const auto& f) -> const HorizonMeta& { return f.meta; }, doc);
}

std::vector<Violation> validate(const ForecastDocument& doc) {
    std::vector<Violation> out;
    check_meta(meta_of(doc), out);
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, PointForecast>) check_point(f, out);
            if constexpr (std::is_same_v<T, QuantileForecast>) check_quantile(f, out);
            if constexpr (std::is_same_v<T, ParametricForecast>) check_parametric(f, out);
            if constexpr (std::is_same_v<T, TrajectoryEnsemble>) check_trajectory(f, out);
        },
        doc);
    return out;
}

std::vector<Violation> validate(const HistorySeries& history) {
    std::vector<Violation> out;
    if (history.values.empty()) out.push_back({"values", std::nullopt, "history is empty"});
    for (std::size_t i = 0; i < history.values.size(); ++i) {
        if (!std::isfinite(history.values[i])) out.push_back({"values", i, "non-finite history value at index " + std::to_string(i)});
    }
    return out;
}

std::vector<Violation> validate(const CalibrationSet& cal) {
    std::vector<Violation> out;
    for (std::size_t i = 0; i < cal.records.size(); ++i) {
        const auto& rec = cal.records[i];
        for (const auto& v : validate(rec.forecast)) {
            out.push_back({"records", i, "record " + std::to_string(i) + ": " + v.message});
        }
        if (rec.realization.size() != meta_of(rec.forecast).horizon) {
            out.push_back({"records", i, "realization length differs from horizon in record " + std::to_string(i)});
        }
        for (double y : rec.realization) {
            if (!std::isfinite(y)) {
                out.push_back({"records", i, "non-finite realization in record " + std::to_string(i)});
                break;
            }
        }
    }
    return out;
}

void require_valid(const ForecastDocument& doc) {
    const auto v = validate(doc);
    if (!v.empty()) throw_violation(v);
}

void require_valid(const CalibrationSet& cal) {
    const auto v = validate(cal);
    if (!v.empty()) throw_violation(v);
}

std::vector<double> rearrange_monotone(std::span<const double> values) {
    for (double v : values) {
        if (!std::isfinite(v)) throw InvalidInput("rearrange_monotone: non-finite value");
    }
    std::vector<double> out(values.begin(), values.end());
    std::sort(out.begin(), out.end());
    return out;
}

EmpiricalDistribution::EmpiricalDistribution(std::span<const double> values, std::span<const double> weights) {
    if (values.empty()) throw InvalidInput("empirical distribution needs at least one value");
    if (!weights.empty() && weights.size() != values.size()) {
        throw InvalidInput("weights length differs from number of values");
    }
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) throw InvalidInput("empirical distribution: non-finite value");
        const double w = weights.empty() ? 1.0 : weights[i];
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("empirical distribution: invalid weight");
        total += w;
    }
    if (!(total > 0.0)) throw InvalidInput("empirical distribution: weights sum to zero");
    values_.reserve(values.size());
    weights_.reserve(values.size());
    cumulative_.reserve(values.size());
    double run = 0.0;
    for (std::size_t i : order) {
        const double w = (weights.empty() ? 1.0 : weights[i]) / total;
        run += w;
        values_.push_back(values[i]);
        weights_.push_back(w);
        cumulative_.push_back(run);
    }
    cumulative_.back() = 1.0;
}

double EmpiricalDistribution::quantile(double q) const {
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("quantile level must lie in [0, 1]");
    if (q <= 0.0) return values_.front();
    auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), q - kCumulativeSlack);
    if (it == cumulative_.end()) return values_.back();
    return values_[static_cast<std::size_t>(it - cumulative_.begin())];
}

double EmpiricalDistribution::cdf(double x) const {
    auto it = std::upper_bound(values_.begin(), values_.end(), x);
    if (it == values_.begin()) return 0.0;
    return cumulative_[static_cast<std::size_t>(it - values_.begin()) - 1];
}

double EmpiricalDistribution::cdf_left(double x) const {
    auto it = std::lower_bound(values_.begin(), values_.end(), x);
    if (it == values_.begin()) return 0.0;
    return cumulative_[static_cast<std::size_t>(it - values_.begin()) - 1];
}

double EmpiricalDistribution::mean() const {
    double s = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) s += weights_[i] * values_[i];
    return s;
}

double EmpiricalDistribution::midpoint_median() const {
    const double lo = quantile(0.5);
    // Upper median: smallest value whose left-CDF is >= 0.5 from the other side.
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), 0.5 + kCumulativeSlack);
    const double hi = it == cumulative_.end() ? values_.back() : values_[static_cast<std::size_t>(it - cumulative_.begin())];
    return 0.5 * (lo + hi);
}

bool PathwiseBand::contains(std::span<const double> path) const {
    if (path.size() != lower.size()) return false;
    for (std::size_t k = 0; k < path.size(); ++k) {
        if (path[k] < lower[k] || path[k] > upper[k]) return false;
    }
    return true;
}

}  // namespace fforms
