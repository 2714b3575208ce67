#include "fforms/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>

#include "fforms/convert.hpp"
#include "fforms/errors.hpp"
#include "fforms/rng.hpp"
#include "fforms/special.hpp"
#include "parallel.hpp"

namespace fforms {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw InvalidInput(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
}

// 8-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 8> kGlX = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                        -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                        0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlW = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                        0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                        0.2223810344533745, 0.1012285362903763};

template <class F>
double gauss_legendre(F&& f, double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double s = 0.0;
    for (std::size_t i = 0; i < kGlX.size(); ++i) s += kGlW[i] * f(mid + half * kGlX[i]);
    return s * half;
}

/// 2 * integral over `pieces` of the quantile-form integrand (Q(u) - y)(1{y < Q(u)} - u).
/// Pieces are split where Q crosses y so the integrand is smooth on each.
double quantile_form_crps(const std::function<double(double)>& q, std::vector<std::pair<double, double>> pieces,
                          double y) {
    double total = 0.0;
    auto integrand = [&](double u) {
        const double v = q(u);
        return (v - y) * ((y < v ? 1.0 : 0.0) - u);
    };
    for (auto [a, b] : pieces) {
        if (!(b > a)) continue;
        const double qa = q(a);
        const double qb = q(b);
        if ((qa - y) * (qb - y) < 0.0) {
            double lo = a;
            double hi = b;
            for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(hi)); ++it) {
                const double m = 0.5 * (lo + hi);
                (q(m) < y ? lo : hi) = m;
            }
            total += gauss_legendre(integrand, a, lo) + gauss_legendre(integrand, hi, b);
        } else {
            total += gauss_legendre(integrand, a, b);
        }
    }
    return 2.0 * total;
}

/// Geometric refinement of (0, b] toward 0 (or [a, 1) toward 1).
void add_tail_pieces(std::vector<std::pair<double, double>>& out, double edge, bool lower) {
    const double span = lower ? edge : 1.0 - edge;
    for (int j = 0; j < 60; ++j) {
        const double hi = span * std::ldexp(1.0, -j);
        const double lo = span * std::ldexp(1.0, -j - 1);
        if (lower) {
            out.push_back({lo, hi});
        } else {
            out.push_back({1.0 - hi, 1.0 - lo});
        }
    }
}

double crps_interpolant(const EmpiricalInterpolant& e, double y) {
    // Piecewise-linear quantile with constant end caps; Simpson is exact on each
    // polynomial piece once the indicator is constant.
    const auto& p = e.points;
    std::vector<std::array<double, 4>> seg;  // (u0, u1, Q0, Q1)
    if (p.front().prob > 0.0) seg.push_back({0.0, p.front().prob, p.front().value, p.front().value});
    for (std::size_t i = 0; i + 1 < p.size(); ++i) seg.push_back({p[i].prob, p[i + 1].prob, p[i].value, p[i + 1].value});
    if (p.back().prob < 1.0) seg.push_back({p.back().prob, 1.0, p.back().value, p.back().value});
    double total = 0.0;
    auto simpson = [&](double a, double b, double qa, double qb) {
        if (!(b > a)) return 0.0;
        const double m = 0.5 * (a + b);
        const double qm = 0.5 * (qa + qb);
        const double ind = y < qm ? 1.0 : 0.0;
        auto g = [&](double u, double v) { return (v - y) * (ind - u); };
        return (b - a) / 6.0 * (g(a, qa) + 4.0 * g(m, qm) + g(b, qb));
    };
    for (const auto& s : seg) {
        const auto [a, b, qa, qb] = s;
        if ((qa - y) * (qb - y) < 0.0) {
            const double u = a + (y - qa) / (qb - qa) * (b - a);
            total += simpson(a, u, qa, y) + simpson(u, b, y, qb);
        } else {
            total += simpson(a, b, qa, qb);
        }
    }
    return 2.0 * total;
}

double crps_spliced(const SplicedGpdTails& s, const FamilyParams& params, double y) {
    if ((s.lower && s.lower->xi >= 1.0) || (s.upper && s.upper->xi >= 1.0)) {
        throw InvalidInput("CRPS undefined: GPD tail with xi >= 1 has no finite mean");
    }
    const auto& p = s.body.points;
    const double lo = s.lower ? s.lower->attach_prob : p.front().prob;
    const double hi = s.upper ? s.upper->attach_prob : p.back().prob;
    std::vector<std::pair<double, double>> pieces;
    // Piece endpoints reach 0 and 1; clamp so tail quantiles stay finite.
    auto q = [&](double u) {
        u = std::clamp(u, 1e-300, std::nextafter(1.0, 0.0));
        if (u < lo) return s.lower ? quantile(params, u) : p.front().value;
        if (u > hi) return s.upper ? quantile(params, u) : p.back().value;
        return quantile(params, u);
    };
    if (lo > 0.0) {
        if (s.lower) {
            add_tail_pieces(pieces, lo, true);
        } else {
            pieces.push_back({0.0, lo});
        }
    }
    double prev = lo;
    for (const auto& b : p) {
        if (b.prob <= lo || b.prob >= hi) continue;
        pieces.push_back({prev, b.prob});
        prev = b.prob;
    }
    pieces.push_back({prev, hi});
    if (hi < 1.0) {
        if (s.upper) {
            add_tail_pieces(pieces, hi, false);
        } else {
            pieces.push_back({hi, 1.0});
        }
    }
    return quantile_form_crps(q, std::move(pieces), y);
}

double summary_median(const ForecastDocument& f, std::size_t k) {
    return std::visit(
        [&](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, PointForecast>) {
                return d.values[k];
            } else if constexpr (std::is_same_v<T, QuantileForecast>) {
                return quantile_to_point(d, Statistic::median).forecast.values[k];
            } else if constexpr (std::is_same_v<T, ParametricForecast>) {
                return quantile(d.params[k], 0.5);
            } else {
                return EmpiricalDistribution(d.paths.column(k), d.weights).quantile(0.5);
            }
        },
        f);
}

}  // namespace

// ---- point errors ----------------------------------------------------------------------

double naive_mae(std::span<const double> training) {
    if (training.size() < 2) throw InvalidInput("MASE needs a training series of length >= 2");
    double s = 0.0;
    for (std::size_t t = 1; t < training.size(); ++t) s += std::abs(training[t] - training[t - 1]);
    s /= static_cast<double>(training.size() - 1);
    if (!(s > 0.0)) throw InvalidInput("MASE undefined: zero naive error on a constant training series");
    return s;
}

PointErrors point_errors(const CalibrationSet& batch, const HistorySeries* training) {
    require_valid(batch);
    if (batch.records.empty()) throw InvalidInput("evaluation batch is empty");
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    std::size_t count = 0;
    for (const auto& rec : batch.records) {
        for (std::size_t k = 0; k < rec.realization.size(); ++k) {
            const double e = rec.realization[k] - summary_median(rec.forecast, k);
            abs_sum += std::abs(e);
            sq_sum += e * e;
            ++count;
        }
    }
    PointErrors out{abs_sum / static_cast<double>(count), sq_sum / static_cast<double>(count), std::nullopt};
    if (training) out.mase = out.mae / naive_mae(training->values);
    return out;
}

// ---- marginal scores ------------------------------------------------------------------------

double pinball(double predicted, double y, double level) {
    if (!(level > 0.0 && level < 1.0)) throw InvalidInput("pinball level must lie in (0, 1)");
    const double d = y - predicted;
    return std::max(level * d, (level - 1.0) * d);
}

double wis(const QuantileForecast& f, std::span<const double> realization) {
    require_valid(ForecastDocument{f});
    require_same_length(realization.size(), f.values.rows(), "wis");
    double s = 0.0;
    for (std::size_t k = 0; k < f.values.rows(); ++k) {
        for (std::size_t l = 0; l < f.levels.size(); ++l) s += pinball(f.values(k, l), realization[k], f.levels[l]);
    }
    return s / static_cast<double>(f.values.rows() * f.levels.size());
}

double crps_gaussian(double mu, double sigma, double y) {
    if (!(sigma > 0.0)) throw InvalidInput("sigma must be > 0");
    const double z = (y - mu) / sigma;
    return sigma * (z * (2.0 * special::normal_cdf(z) - 1.0) + 2.0 * special::normal_pdf(z) - 1.0 / std::sqrt(special::kPi));
}

double crps_student_t(double mu, double sigma, double nu, double y) {
    if (!(sigma > 0.0)) throw InvalidInput("sigma must be > 0");
    if (!(nu > 1.0)) throw InvalidInput("CRPS undefined for student_t with nu <= 1");
    const double z = (y - mu) / sigma;
    const double f = special::student_t_pdf(z, nu);
    const double F = special::student_t_cdf(z, nu);
    const double lb1 = special::log_beta(0.5, nu - 0.5);
    const double lb2 = special::log_beta(0.5, 0.5 * nu);
    const double c = 2.0 * std::sqrt(nu) * std::exp(lb1 - 2.0 * lb2) / (nu - 1.0);
    return sigma * (z * (2.0 * F - 1.0) + 2.0 * f * (nu + z * z) / (nu - 1.0) - c);
}

double crps_ensemble(std::span<const double> members, double y, std::span<const double> weights) {
    const EmpiricalDistribution d(members, weights);
    const auto& x = d.values();
    const auto& w = d.weights();
    double first = 0.0;
    double spread = 0.0;  // sum_i w_i x_i (C_{i-1} + C_i - 1) = half the double sum
    double cum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        first += w[i] * std::abs(x[i] - y);
        const double prev = cum;
        cum += w[i];
        spread += w[i] * x[i] * (prev + cum - 1.0);
    }
    return first - spread;
}

double crps_quantile_grid(std::span<const double> levels, std::span<const double> values, double y) {
    require_same_length(levels.size(), values.size(), "crps_quantile_grid");
    const std::size_t L = levels.size();
    if (L == 0) throw InvalidInput("quantile CRPS needs at least one level");
    double s = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
        const double left = l == 0 ? 0.0 : 0.5 * (levels[l - 1] + levels[l]);
        const double right = l + 1 == L ? 1.0 : 0.5 * (levels[l] + levels[l + 1]);
        s += (right - left) * pinball(values[l], y, levels[l]);
    }
    return 2.0 * s;
}

double crps_marginal(const FamilyParams& params, double y) {
    require_valid(params);
    if (const auto* g = std::get_if<Gaussian>(&params)) return crps_gaussian(g->mu, g->sigma, y);
    if (const auto* t = std::get_if<StudentT>(&params)) return crps_student_t(t->mu, t->sigma, t->nu, y);
    if (const auto* e = std::get_if<EmpiricalInterpolant>(&params)) return crps_interpolant(*e, y);
    return crps_spliced(std::get<SplicedGpdTails>(params), params, y);
}

CrpsResult crps(const ForecastDocument& f, std::span<const double> realization) {
    require_valid(f);
    require_metric_support(Metric::crps, kind_of(f));
    const std::size_t h = meta_of(f).horizon;
    require_same_length(realization.size(), h, "crps");
    CrpsResult out;
    out.per_step.resize(h);
    for (std::size_t k = 0; k < h; ++k) {
        const double y = realization[k];
        if (const auto* q = std::get_if<QuantileForecast>(&f)) {
            out.per_step[k] = crps_quantile_grid(q->levels, q->values.row(k), y);
            out.approximate = true;
        } else if (const auto* p = std::get_if<ParametricForecast>(&f)) {
            out.per_step[k] = crps_marginal(p->params[k], y);
        } else {
            const auto& ens = std::get<TrajectoryEnsemble>(f);
            out.per_step[k] = crps_ensemble(ens.paths.column(k), y, ens.weights);
        }
    }
    out.mean = std::accumulate(out.per_step.begin(), out.per_step.end(), 0.0) / static_cast<double>(h);
    return out;
}

double log_score(const ParametricForecast& f, std::span<const double> realization) {
    require_valid(ForecastDocument{f});
    require_same_length(realization.size(), f.params.size(), "log_score");
    double s = 0.0;
    for (std::size_t k = 0; k < f.params.size(); ++k) {
        double ld;
        if (std::holds_alternative<Gaussian>(f.params[k]) || std::holds_alternative<StudentT>(f.params[k])) {
            ld = log_density(f.params[k], realization[k]);
        } else {
            double d = 0.0;
            try {
                d = density(f.params[k], realization[k]);
            } catch (const OutOfSupport&) {
                d = 0.0;
            }
            ld = std::log(std::max(d, 1e-300));
        }
        s -= std::max(ld, std::log(1e-300));
    }
    return s / static_cast<double>(f.params.size());
}

// ---- path scores ---------------------------------------------------------------------------------

double energy_score(const TrajectoryEnsemble& ens, std::span<const double> realization) {
    require_valid(ForecastDocument{ens});
    const std::size_t M = ens.size();
    const std::size_t h = ens.paths.cols();
    require_same_length(realization.size(), h, "energy_score");
    auto norm = [&](std::span<const double> a, std::span<const double> b) {
        double s = 0.0;
        for (std::size_t k = 0; k < h; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
        return std::sqrt(s);
    };
    std::vector<double> first(M);
    std::vector<double> pair(M);
    detail::parallel_for(M, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            first[i] = ens.weight(i) * norm(ens.paths.row(i), realization);
            double s = 0.0;
            for (std::size_t j = i + 1; j < M; ++j) s += ens.weight(j) * norm(ens.paths.row(i), ens.paths.row(j));
            pair[i] = ens.weight(i) * s;
        }
    });
    double a = 0.0;
    double b = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        a += first[i];
        b += pair[i];
    }
    // Off-diagonal pairs counted once above: 0.5 * sum_{i != j} = sum_{i < j}.
    return a - b;
}

VariogramWeights parse_variogram_weights(std::string_view name) {
    if (name == "uniform") return VariogramWeights::uniform;
    if (name == "inverse_lag") return VariogramWeights::inverse_lag;
    throw InvalidInput("unknown variogram weights '" + std::string(name) + "' (expected uniform or inverse_lag)");
}

double variogram_score(const TrajectoryEnsemble& ens, std::span<const double> realization, const Matrix& weights) {
    require_valid(ForecastDocument{ens});
    const std::size_t h = ens.paths.cols();
    if (h < 2) throw InvalidInput("variogram needs >= 2 steps");
    require_same_length(realization.size(), h, "variogram_score");
    if (weights.rows() != h || weights.cols() != h) throw InvalidInput("variogram weights must be h x h");
    double score = 0.0;
    for (std::size_t t = 0; t < h; ++t) {
        for (std::size_t u = t + 1; u < h; ++u) {
            double expected = 0.0;
            for (std::size_t m = 0; m < ens.size(); ++m) expected += ens.weight(m) * std::abs(ens.paths(m, t) - ens.paths(m, u));
            const double d = std::abs(realization[t] - realization[u]) - expected;
            score += weights(t, u) * d * d;
        }
    }
    return score;
}

double variogram_score(const TrajectoryEnsemble& ens, std::span<const double> realization, VariogramWeights preset) {
    const std::size_t h = ens.paths.cols();
    if (h < 2) throw InvalidInput("variogram needs >= 2 steps");
    Matrix w(h, h, 1.0);
    if (preset == VariogramWeights::inverse_lag) {
        for (std::size_t t = 0; t < h; ++t)
            for (std::size_t u = 0; u < h; ++u) w(t, u) = t == u ? 0.0 : 1.0 / static_cast<double>(t > u ? t - u : u - t);
    }
    return variogram_score(ens, realization, w);
}

// ---- event scores -------------------------------------------------------------------------------

double brier(std::span<const double> predictions, std::span<const int> outcomes) {
    require_same_length(predictions.size(), outcomes.size(), "brier");
    if (predictions.empty()) throw InvalidInput("brier needs at least one prediction");
    double s = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double p = predictions[i];
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("predicted probability outside [0, 1]");
        if (outcomes[i] != 0 && outcomes[i] != 1) throw InvalidInput("outcomes must be 0 or 1");
        s += (p - outcomes[i]) * (p - outcomes[i]);
    }
    return s / static_cast<double>(predictions.size());
}

double integrated_brier(const Matrix& survival, std::span<const std::optional<std::size_t>> hitting_times) {
    const std::size_t n = survival.rows();
    const std::size_t h = survival.cols();
    require_same_length(n, hitting_times.size(), "integrated_brier");
    if (n == 0 || h == 0) throw InvalidInput("integrated brier needs a non-empty survival matrix");
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& tau = hitting_times[i];
        if (tau && (*tau < 1 || *tau > h)) throw InvalidInput("hitting time outside 1..h");
        for (std::size_t k = 1; k <= h; ++k) {
            const double alive = (!tau || *tau > k) ? 1.0 : 0.0;
            const double d = survival(i, k - 1) - alive;
            s += d * d;
        }
    }
    return s / static_cast<double>(n * h);
}

// ---- calibration diagnostics ----------------------------------------------------------------------

namespace {

PitValue pit_marginal(const FamilyParams& params, double y, double u) {
    try {
        const double right = cdf(params, y);
        const double left = cdf_left(params, y);
        return {left + u * (right - left), false};
    } catch (const OutOfSupport&) {
        const auto* e = std::get_if<EmpiricalInterpolant>(&params);
        const auto* s = std::get_if<SplicedGpdTails>(&params);
        const EmpiricalInterpolant& body = e ? *e : s->body;
        const bool below = y < body.points.front().value;
        return {below ? body.points.front().prob : body.points.back().prob, true};
    }
}

}  // namespace

PitValue pit_value(const ForecastDocument& f, std::size_t step, double y, double u) {
    require_metric_support(Metric::pit, kind_of(f));
    if (step >= meta_of(f).horizon) throw InvalidInput("PIT step outside the horizon");
    if (const auto* p = std::get_if<ParametricForecast>(&f)) return pit_marginal(p->params[step], y, u);
    if (const auto* q = std::get_if<QuantileForecast>(&f)) {
        if (q->levels.size() < 2) throw InvalidInput("PIT on a quantile forecast needs at least 2 levels");
        EmpiricalInterpolant body;
        for (std::size_t l = 0; l < q->levels.size(); ++l) body.points.push_back({q->levels[l], q->values(step, l)});
        return pit_marginal(body, y, u);
    }
    const auto& ens = std::get<TrajectoryEnsemble>(f);
    const EmpiricalDistribution d(ens.paths.column(step), ens.weights);
    const double right = d.cdf(y);
    const double left = d.cdf_left(y);
    return {left + u * (right - left), false};
}

double ks_uniform(std::span<const double> values) {
    if (values.empty()) throw InvalidInput("KS distance needs at least one value");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double x = std::clamp(v[i], 0.0, 1.0);
        d = std::max({d, static_cast<double>(i + 1) / n - x, x - static_cast<double>(i) / n});
    }
    return d;
}

PitResult pit_values(const CalibrationSet& batch, std::size_t step, std::uint64_t seed) {
    require_valid(batch);
    PitResult out;
    for (std::size_t i = 0; i < batch.records.size(); ++i) {
        const auto& rec = batch.records[i];
        Rng rng(seed, i);
        const auto v = pit_value(rec.forecast, step, rec.realization.at(step), rng.uniform());
        out.values.push_back(v.value);
        if (v.clipped) ++out.clipped;
    }
    out.ks_distance = ks_uniform(out.values);
    return out;
}

ReliabilityTable reliability(std::span<const double> predictions, std::span<const int> outcomes, std::size_t bins) {
    require_same_length(predictions.size(), outcomes.size(), "reliability");
    if (bins < 1) throw InvalidInput("reliability needs at least one bin");
    std::vector<double> psum(bins, 0.0);
    std::vector<double> osum(bins, 0.0);
    ReliabilityTable t;
    t.bins.resize(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        t.bins[b].lower = static_cast<double>(b) / static_cast<double>(bins);
        t.bins[b].upper = static_cast<double>(b + 1) / static_cast<double>(bins);
    }
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double p = predictions[i];
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("predicted probability outside [0, 1]");
        if (outcomes[i] != 0 && outcomes[i] != 1) throw InvalidInput("outcomes must be 0 or 1");
        const auto b = std::min(static_cast<std::size_t>(p * static_cast<double>(bins)), bins - 1);
        ++t.bins[b].count;
        psum[b] += p;
        osum[b] += outcomes[i];
    }
    for (std::size_t b = 0; b < bins; ++b) {
        if (t.bins[b].count == 0) continue;
        const double n = static_cast<double>(t.bins[b].count);
        t.bins[b].mean_prediction = psum[b] / n;
        t.bins[b].frequency = osum[b] / n;
    }
    return t;
}

CoverageMode parse_coverage_mode(std::string_view name) {
    if (name == "pointwise") return CoverageMode::pointwise;
    if (name == "simultaneous") return CoverageMode::simultaneous;
    throw InvalidInput("unknown coverage mode '" + std::string(name) + "' (expected pointwise or simultaneous)");
}

double coverage(std::span<const IntervalSet> intervals, std::span<const std::vector<double>> realizations,
                CoverageMode mode) {
    require_same_length(intervals.size(), realizations.size(), "coverage");
    if (intervals.empty()) throw InvalidInput("coverage needs at least one window");
    std::size_t inside = 0;
    std::size_t total = 0;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        const auto& iv = intervals[i];
        const auto& y = realizations[i];
        require_same_length(iv.lower.size(), y.size(), "coverage");
        bool all = true;
        for (std::size_t k = 0; k < y.size(); ++k) {
            const bool in = y[k] >= iv.lower[k] && y[k] <= iv.upper[k];
            all = all && in;
            if (mode == CoverageMode::pointwise) {
                inside += in ? 1 : 0;
                ++total;
            }
        }
        if (mode == CoverageMode::simultaneous) {
            inside += all ? 1 : 0;
            ++total;
        }
    }
    return static_cast<double>(inside) / static_cast<double>(total);
}

// ---- compatibility --------------------------------------------------------------------------------

Metric parse_metric(std::string_view name) {
    static const std::pair<std::string_view, Metric> table[] = {
        {"mae", Metric::mae},         {"mse", Metric::mse},         {"mase", Metric::mase},
        {"wis", Metric::wis},         {"crps", Metric::crps},       {"log_score", Metric::log_score},
        {"energy", Metric::energy},   {"variogram", Metric::variogram}, {"brier", Metric::brier},
        {"ibs", Metric::ibs},         {"pit", Metric::pit},         {"coverage", Metric::coverage}};
    for (const auto& [n, m] : table) {
        if (n == name) return m;
    }
    throw InvalidInput("unknown metric '" + std::string(name) + "'");
}

std::string_view metric_name(Metric m) {
    switch (m) {
        case Metric::mae: return "mae";
        case Metric::mse: return "mse";
        case Metric::mase: return "mase";
        case Metric::wis: return "wis";
        case Metric::crps: return "crps";
        case Metric::log_score: return "log_score";
        case Metric::energy: return "energy";
        case Metric::variogram: return "variogram";
        case Metric::brier: return "brier";
        case Metric::ibs: return "ibs";
        case Metric::pit: return "pit";
        case Metric::coverage: return "coverage";
    }
    return "unknown";
}

void require_metric_support(Metric m, ForecastKind kind) {
    auto refuse = [&](const std::string& why) {
        throw Unsupported("metric '" + std::string(metric_name(m)) + "' cannot score a " + std::string(kind_name(kind)) +
                          " forecast: " + why);
    };
    switch (m) {
        case Metric::mae:
        case Metric::mse:
        case Metric::mase:
            return;
        case Metric::wis:
        case Metric::crps:
        case Metric::pit:
        case Metric::coverage:
            if (kind == ForecastKind::point) refuse("a point forecast carries no predictive distribution");
            return;
        case Metric::log_score:
            if (kind != ForecastKind::parametric) refuse("the log score needs a predictive density");
            return;
        case Metric::energy:
        case Metric::variogram:
        case Metric::brier:
        case Metric::ibs:
            if (kind != ForecastKind::trajectory) {
                refuse(kind == ForecastKind::point
                           ? "path scores need a joint predictive distribution; a point forecast has none"
                           : "path scores need a joint predictive distribution; lift the marginals with a copula first");
            }
            return;
    }
}

}  // namespace fforms
