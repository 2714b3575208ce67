#include "fforms/tasks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "fforms/errors.hpp"
#include "fforms/rng.hpp"

namespace fforms {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

void require_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1), got " + fmt(alpha));
}

void require_window(std::span<const std::size_t> window, std::size_t h) {
    if (window.empty()) throw InvalidInput("window must not be empty");
    for (std::size_t k : window) {
        if (k >= h) {
            throw InvalidInput("window step " + std::to_string(k + 1) + " outside 1.." + std::to_string(h));
        }
    }
}

double kish_ess(const TrajectoryEnsemble& ens) {
    if (ens.weights.empty()) return static_cast<double>(ens.size());
    double s = 0.0;
    for (double w : ens.weights) s += w * w;
    return 1.0 / s;
}

Provenance base_provenance(ForecastKind kind) { return Provenance{std::string(kind_name(kind)), {}, {}, {}, {}, {}, {}}; }

std::string tail_description(const TailPolicy& t) {
    if (t.kind == TailPolicy::Kind::none) return "none (grid interpolation only)";
    std::string s = "gpd";
    if (t.lower_attach) s += " lower_attach=" + fmt(*t.lower_attach);
    if (t.upper_attach) s += " upper_attach=" + fmt(*t.upper_attach);
    return s;
}

/// Half-width representation of per-step intervals as a band.
PathwiseBand band_from_intervals(const IntervalSet& iv) {
    const std::size_t h = iv.lower.size();
    PathwiseBand b;
    b.multiplier = 1.0;
    b.lower = iv.lower;
    b.upper = iv.upper;
    b.center.resize(h);
    b.scale.resize(h);
    for (std::size_t k = 0; k < h; ++k) {
        b.center[k] = 0.5 * (iv.lower[k] + iv.upper[k]);
        b.scale[k] = std::max(0.5 * (iv.upper[k] - iv.lower[k]), 1e-12);
    }
    return b;
}

std::uint64_t require_seed(const Assumptions& a, std::string_view purpose) {
    if (!a.seed) throw InvalidInput(std::string(purpose) + " is stochastic and requires an explicit seed");
    return *a.seed;
}

}  // namespace

// ---- events ---------------------------------------------------------------------------

Functional parse_functional(std::string_view name) {
    if (name == "sum") return Functional::sum;
    if (name == "max") return Functional::max;
    if (name == "min") return Functional::min;
    if (name == "first_crossing" || name == "crossing") return Functional::first_crossing;
    throw InvalidInput("unknown functional '" + std::string(name) + "'");
}

std::string_view functional_name(Functional f) {
    switch (f) {
        case Functional::sum: return "sum";
        case Functional::max: return "max";
        case Functional::min: return "min";
        case Functional::first_crossing: return "first_crossing";
    }
    return "unknown";
}

Comparator parse_comparator(std::string_view name) {
    if (name == "ge" || name == ">=") return Comparator::ge;
    if (name == "le" || name == "<=") return Comparator::le;
    throw InvalidInput("unknown comparator '" + std::string(name) + "' (expected ge or le)");
}

std::string_view comparator_name(Comparator c) { return c == Comparator::ge ? "ge" : "le"; }

void validate_event(const EventSpec& e, std::size_t h) {
    require_window(e.window, h);
    if (!std::isfinite(e.threshold)) throw InvalidInput("event threshold must be finite");
}

bool compare(double value, Comparator c, double threshold) {
    return c == Comparator::ge ? value >= threshold : value <= threshold;
}

double functional_value(std::span<const double> path, const EventSpec& e) {
    switch (e.functional) {
        case Functional::sum: {
            double s = 0.0;
            for (std::size_t k : e.window) s += path[k];
            return s;
        }
        case Functional::max: {
            double m = -std::numeric_limits<double>::infinity();
            for (std::size_t k : e.window) m = std::max(m, path[k]);
            return m;
        }
        case Functional::min: {
            double m = std::numeric_limits<double>::infinity();
            for (std::size_t k : e.window) m = std::min(m, path[k]);
            return m;
        }
        case Functional::first_crossing:
            for (std::size_t k : e.window) {
                if (compare(path[k], e.comparator, e.threshold)) return 1.0;
            }
            return 0.0;
    }
    return 0.0;
}

bool event_holds(std::span<const double> path, const EventSpec& e) {
    const double v = functional_value(path, e);
    if (e.functional == Functional::first_crossing) return v == 1.0;
    return compare(v, e.comparator, e.threshold);
}

std::vector<std::size_t> contiguous_window(std::size_t first, std::size_t last) {
    if (last < first) throw InvalidInput("window end precedes window start");
    std::vector<std::size_t> w(last - first + 1);
    std::iota(w.begin(), w.end(), first);
    return w;
}

// ---- intervals and bands ----------------------------------------------------------------------

IntervalSet pointwise_intervals(const TrajectoryEnsemble& ens, double alpha) {
    require_alpha(alpha);
    const double levels[] = {alpha / 2.0, 1.0 - alpha / 2.0};
    const auto q = traj_to_quantile(ens, levels);
    return {q.values.column(0), q.values.column(1)};
}

IntervalSet pointwise_intervals(const ParametricForecast& f, double alpha) {
    require_alpha(alpha);
    const double levels[] = {alpha / 2.0, 1.0 - alpha / 2.0};
    const auto q = parametric_to_quantile(f, levels);
    return {q.values.column(0), q.values.column(1)};
}

IntervalSet pointwise_intervals(const QuantileForecast& f, double alpha) {
    require_alpha(alpha);
    require_valid(ForecastDocument{f});
    const double lo = alpha / 2.0;
    const double hi = 1.0 - alpha / 2.0;
    const auto& lv = f.levels;
    if (lo < lv.front() - 1e-12 || hi > lv.back() + 1e-12) {
        throw OutOfSupport("interval levels (" + fmt(lo) + ", " + fmt(hi) + ") fall outside the quantile grid [" +
                           fmt(lv.front()) + ", " + fmt(lv.back()) + "]; requires retraining or tail model");
    }
    const std::size_t h = f.values.rows();
    IntervalSet out{std::vector<double>(h), std::vector<double>(h)};
    if (lv.size() == 1) {
        for (std::size_t k = 0; k < h; ++k) out.lower[k] = out.upper[k] = f.values(k, 0);
        return out;
    }
    const auto interp = quantile_to_interpolated_cdf(f);
    for (std::size_t k = 0; k < h; ++k) {
        out.lower[k] = quantile(interp.params[k], std::clamp(lo, lv.front(), lv.back()));
        out.upper[k] = quantile(interp.params[k], std::clamp(hi, lv.front(), lv.back()));
    }
    return out;
}

CenterScale parse_center_scale(std::string_view name) {
    if (name == "median_mad") return CenterScale::median_mad;
    if (name == "mean_sd") return CenterScale::mean_sd;
    throw InvalidInput("unknown center/scale '" + std::string(name) + "' (expected median_mad or mean_sd)");
}

PathwiseBand pathwise_band_from_trajectory(const TrajectoryEnsemble& ens, double alpha, CenterScale cs) {
    require_valid(ForecastDocument{ens});
    require_alpha(alpha);
    const std::size_t M = ens.size();
    const std::size_t h = ens.paths.cols();
    if (M < 2) throw InvalidInput("pathwise band needs at least 2 paths");

    PathwiseBand band;
    band.center.resize(h);
    band.scale.resize(h);
    for (std::size_t k = 0; k < h; ++k) {
        const auto col = ens.paths.column(k);
        const EmpiricalDistribution d(col, ens.weights);
        double center;
        double scale;
        if (cs == CenterScale::median_mad) {
            center = d.midpoint_median();
            std::vector<double> dev(M);
            for (std::size_t m = 0; m < M; ++m) dev[m] = std::abs(col[m] - center);
            scale = EmpiricalDistribution(dev, ens.weights).midpoint_median();
        } else {
            center = d.mean();
            double var = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) var += d.weights()[i] * (d.values()[i] - center) * (d.values()[i] - center);
            scale = std::sqrt(var);
        }
        band.center[k] = center;
        band.scale[k] = std::max(scale, 1e-12);
    }

    std::vector<double> dev(M, 0.0);
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t k = 0; k < h; ++k) {
            dev[m] = std::max(dev[m], std::abs(ens.paths(m, k) - band.center[k]) / band.scale[k]);
        }
    }
    double c = EmpiricalDistribution(dev, ens.weights).quantile(1.0 - alpha);

    // Guard against rounding in m +- c*s: every path with d <= c must sit inside.
    auto materialize = [&] {
        band.lower.resize(h);
        band.upper.resize(h);
        for (std::size_t k = 0; k < h; ++k) {
            band.lower[k] = band.center[k] - c * band.scale[k];
            band.upper[k] = band.center[k] + c * band.scale[k];
        }
    };
    materialize();
    for (std::size_t m = 0; m < M; ++m) {
        if (dev[m] > c) continue;
        while (!band.contains(ens.paths.row(m))) {
            c = std::nextafter(c, std::numeric_limits<double>::infinity());
            materialize();
        }
    }
    band.multiplier = c;
    return band;
}

Correction parse_correction(std::string_view name) {
    if (name == "sidak") return Correction::sidak;
    if (name == "bonferroni") return Correction::bonferroni;
    throw InvalidInput("unknown correction '" + std::string(name) + "' (expected sidak or bonferroni)");
}

double adjusted_alpha(double alpha, std::size_t h, Correction c) {
    require_alpha(alpha);
    if (h < 1) throw InvalidInput("horizon must be >= 1");
    const double hd = static_cast<double>(h);
    return c == Correction::sidak ? -std::expm1(std::log1p(-alpha) / hd) : alpha / hd;
}

namespace {

template <class F>
BandResult band_adjusted(const F& f, double alpha, Correction c, ForecastKind kind) {
    const double a = adjusted_alpha(alpha, f.meta.horizon, c);
    BandResult out{band_from_intervals(pointwise_intervals(f, a)), a, base_provenance(kind)};
    out.provenance.approximations.push_back(
        c == Correction::sidak ? "sidak adjustment: exact simultaneous level under independent steps"
                               : "bonferroni adjustment: conservative under any dependence");
    return out;
}

}  // namespace

BandResult band_sidak(const ParametricForecast& f, double alpha, Correction c) {
    return band_adjusted(f, alpha, c, ForecastKind::parametric);
}

BandResult band_sidak(const QuantileForecast& f, double alpha, Correction c) {
    return band_adjusted(f, alpha, c, ForecastKind::quantile);
}

// ---- events, VaR ----------------------------------------------------------------------------------

EventResult event_probability(const TrajectoryEnsemble& ens, const EventSpec& e) {
    require_valid(ForecastDocument{ens});
    validate_event(e, ens.paths.cols());
    // Unweighted ensembles count hits so the estimate is an exact ratio.
    double p = 0.0;
    std::size_t hits = 0;
    for (std::size_t m = 0; m < ens.size(); ++m) {
        if (!event_holds(ens.paths.row(m), e)) continue;
        ++hits;
        if (!ens.weights.empty()) p += ens.weights[m];
    }
    if (ens.weights.empty()) p = static_cast<double>(hits) / static_cast<double>(ens.size());
    p = std::clamp(p, 0.0, 1.0);
    EventResult out{p, std::sqrt(p * (1.0 - p) / kish_ess(ens)), base_provenance(ForecastKind::trajectory)};
    out.provenance.paths = ens.size();
    return out;
}

EventResult event_probability_marginal(const ParametricForecast& f, const EventSpec& e, const CopulaSpec& copula,
                                       std::size_t paths, std::uint64_t seed, bool strict_tails) {
    validate_event(e, f.meta.horizon);
    const auto lifted = marginals_to_trajectory(f, copula, paths, seed, strict_tails);
    auto out = event_probability(lifted.ensemble, e);
    out.provenance = base_provenance(ForecastKind::parametric);
    out.provenance.copula = describe(copula);
    out.provenance.paths = paths;
    out.provenance.seed = seed;
    if (lifted.clipped_draws > 0) {
        out.provenance.approximations.push_back(std::to_string(lifted.clipped_draws) +
                                                " copula draws clipped into the quantile grid");
    }
    return out;
}

EventResult event_probability_marginal(const QuantileForecast& f, const EventSpec& e, const CopulaSpec& copula,
                                       std::size_t paths, std::uint64_t seed, const LiftOptions& options) {
    auto out = event_probability_marginal(quantile_to_interpolated_cdf(f, options.tails), e, copula, paths, seed,
                                          options.strict_tails);
    out.provenance.source_type = "quantile";
    out.provenance.tail_model = tail_description(options.tails);
    return out;
}

namespace {

std::vector<double> path_losses(const TrajectoryEnsemble& ens) {
    std::vector<double> loss(ens.size());
    for (std::size_t m = 0; m < ens.size(); ++m) {
        double s = 0.0;
        for (double v : ens.paths.row(m)) s += v;
        loss[m] = -s;
    }
    return loss;
}

}  // namespace

VarResult value_at_risk(const TrajectoryEnsemble& ens, double alpha) {
    require_valid(ForecastDocument{ens});
    require_alpha(alpha);
    const auto loss = path_losses(ens);
    VarResult out{EmpiricalDistribution(loss, ens.weights).quantile(1.0 - alpha), alpha,
                  base_provenance(ForecastKind::trajectory)};
    out.provenance.paths = ens.size();
    out.provenance.notes.push_back("loss = -sum of path values over the horizon");
    return out;
}

double loss_tail_probability(const TrajectoryEnsemble& ens, double level) {
    require_valid(ForecastDocument{ens});
    const auto loss = path_losses(ens);
    return 1.0 - EmpiricalDistribution(loss, ens.weights).cdf(level);
}

// ---- survival ---------------------------------------------------------------------------------------

SurvivalCurve survival_product(std::span<const double> p) {
    SurvivalCurve out;
    double s = 1.0;
    for (double pj : p) {
        if (!(pj >= 0.0 && pj <= 1.0)) throw InvalidInput("crossing probability outside [0, 1]");
        s *= 1.0 - pj;
        out.survival.push_back(s);
    }
    out.censored_mass = out.survival.empty() ? 1.0 : out.survival.back();
    return out;
}

namespace {

SurvivalResult survival_marginal_impl(const ParametricForecast& f, double threshold, Comparator c,
                                      ForecastKind kind) {
    require_valid(ForecastDocument{f});
    std::vector<double> p(f.params.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        p[k] = c == Comparator::ge ? 1.0 - cdf_left(f.params[k], threshold) : cdf(f.params[k], threshold);
        p[k] = std::clamp(p[k], 0.0, 1.0);
    }
    SurvivalResult out;
    out.curve = survival_product(p);
    out.independence_approximation = true;
    out.provenance = base_provenance(kind);
    out.provenance.approximations.push_back("independence_approximation: per-step crossings treated as independent");
    return out;
}

}  // namespace

SurvivalResult survival_from_marginals(const ParametricForecast& f, double threshold, Comparator c) {
    return survival_marginal_impl(f, threshold, c, ForecastKind::parametric);
}

SurvivalResult survival_from_marginals(const QuantileForecast& f, double threshold, Comparator c,
                                       const TailPolicy& tails) {
    auto out = survival_marginal_impl(quantile_to_interpolated_cdf(f, tails), threshold, c, ForecastKind::quantile);
    out.provenance.tail_model = tail_description(tails);
    return out;
}

SurvivalResult survival_from_trajectories(const TrajectoryEnsemble& ens, double threshold, Comparator c) {
    require_valid(ForecastDocument{ens});
    const std::size_t h = ens.paths.cols();
    SurvivalResult out;
    // Unweighted ensembles accumulate counts so the curve is an exact ratio of integers.
    const bool weighted = !ens.weights.empty();
    std::vector<double> mass(h + 1, 0.0);  // slot h = never crossed
    for (std::size_t m = 0; m < ens.size(); ++m) {
        const auto row = ens.paths.row(m);
        std::size_t k = 0;
        while (k < h && !compare(row[k], c, threshold)) ++k;
        mass[k] += weighted ? ens.weights[m] : 1.0;
    }
    const double total = weighted ? 1.0 : static_cast<double>(ens.size());
    out.hitting_mass.resize(h);
    for (std::size_t k = 0; k < h; ++k) out.hitting_mass[k] = mass[k] / total;
    const double censored = mass[h] / total;
    const double ess = kish_ess(ens);
    double remaining = weighted ? 1.0 : total;
    for (std::size_t k = 0; k < h; ++k) {
        remaining -= mass[k];
        const double s = std::clamp(remaining / total, 0.0, 1.0);
        out.curve.survival.push_back(s);
        out.standard_error.push_back(std::sqrt(s * (1.0 - s) / ess));
    }
    // Re-anchor S(h) on the directly counted censored mass.
    out.curve.censored_mass = censored;
    if (h > 0) out.curve.survival.back() = censored;
    for (std::size_t k = h; k-- > 1;) {
        out.curve.survival[k - 1] = std::max(out.curve.survival[k - 1], out.curve.survival[k]);
    }
    out.provenance = base_provenance(ForecastKind::trajectory);
    out.provenance.paths = ens.size();
    return out;
}

std::vector<double> hazard_from_survival(const SurvivalCurve& s) {
    std::vector<double> h(s.survival.size());
    double prev = 1.0;
    for (std::size_t k = 0; k < s.survival.size(); ++k) {
        const double cur = s.survival[k];
        if (cur > prev + 1e-15 || cur < 0.0) throw InvalidInput("survival curve must be non-increasing in [0, 1]");
        h[k] = prev > 0.0 ? (prev - cur) / prev : 0.0;
        prev = cur;
    }
    return h;
}

SurvivalCurve survival_from_hazard(std::span<const double> hazard) { return survival_product(hazard); }

// ---- aggregates ---------------------------------------------------------------------------------------

AggregateOutput parse_aggregate_output(std::string_view name) {
    if (name == "mean") return AggregateOutput::mean;
    if (name == "distribution") return AggregateOutput::distribution;
    throw InvalidInput("unknown aggregate output '" + std::string(name) + "' (expected mean or distribution)");
}

AggregateResult window_aggregate(const TrajectoryEnsemble& ens, std::span<const std::size_t> window,
                                 AggregateOutput output) {
    require_valid(ForecastDocument{ens});
    require_window(window, ens.paths.cols());
    std::vector<double> z(ens.size());
    for (std::size_t m = 0; m < ens.size(); ++m) {
        double s = 0.0;
        for (std::size_t k : window) s += ens.paths(m, k);
        z[m] = s;
    }
    double mean = 0.0;
    for (std::size_t m = 0; m < z.size(); ++m) mean += ens.weight(m) * z[m];
    double var = 0.0;
    for (std::size_t m = 0; m < z.size(); ++m) var += ens.weight(m) * (z[m] - mean) * (z[m] - mean);
    AggregateResult out;
    out.mean = mean;
    out.standard_error = std::sqrt(var / kish_ess(ens));
    if (output == AggregateOutput::distribution) out.distribution = EmpiricalDistribution(z, ens.weights);
    out.provenance = base_provenance(ForecastKind::trajectory);
    out.provenance.paths = ens.size();
    return out;
}

AggregateResult window_aggregate(const PointForecast& f, std::span<const std::size_t> window, AggregateOutput output) {
    require_valid(ForecastDocument{f});
    require_window(window, f.values.size());
    if (output == AggregateOutput::distribution) {
        throw Unsupported("window aggregate distribution is unavailable for point forecasts: no uncertainty");
    }
    AggregateResult out;
    for (std::size_t k : window) out.mean += f.values[k];
    out.provenance = base_provenance(ForecastKind::point);
    out.provenance.approximations.push_back("no uncertainty: sum of point forecasts");
    return out;
}

// ---- scenarios ------------------------------------------------------------------------------------------

ScenarioFunctionals scenario_functionals(const TrajectoryEnsemble& ens, double threshold) {
    require_valid(ForecastDocument{ens});
    const std::size_t M = ens.size();
    std::vector<ScenarioRecord> rec(M);
    std::vector<double> peak(M);
    std::vector<double> exc(M);
    std::vector<double> cum(M);
    for (std::size_t m = 0; m < M; ++m) {
        const auto row = ens.paths.row(m);
        ScenarioRecord r{-std::numeric_limits<double>::infinity(), 0, 0.0};
        for (double v : row) {
            r.peak = std::max(r.peak, v);
            if (v > threshold) ++r.exceedances;
            r.cumulative += v;
        }
        rec[m] = r;
        peak[m] = r.peak;
        exc[m] = static_cast<double>(r.exceedances);
        cum[m] = r.cumulative;
    }
    ScenarioFunctionals out{std::move(rec), EmpiricalDistribution(peak, ens.weights),
                            EmpiricalDistribution(exc, ens.weights), EmpiricalDistribution(cum, ens.weights),
                            base_provenance(ForecastKind::trajectory)};
    out.provenance.paths = M;
    return out;
}

double ExceedanceCurve::at(double loss) const {
    // Last breakpoint with x_i <= loss.
    auto it = std::upper_bound(x.begin(), x.end(), loss);
    if (it == x.begin()) return 1.0;
    return probability[static_cast<std::size_t>(it - x.begin()) - 1];
}

ExceedanceCurve exceedance_curve(std::span<const double> losses, std::span<const double> weights) {
    const EmpiricalDistribution d(losses, weights);
    ExceedanceCurve out;
    const auto& v = d.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
        out.x.push_back(v[i]);
        out.probability.push_back(std::max(0.0, 1.0 - d.cdf(v[i])));
    }
    return out;
}

namespace {

void check_losses(const TrajectoryEnsemble& ens, std::span<const double> losses) {
    require_valid(ForecastDocument{ens});
    if (losses.size() != ens.size()) throw InvalidInput("loss values must match the number of paths");
    for (double l : losses) {
        if (!std::isfinite(l)) throw InvalidInput("loss values must be finite");
        if (l < 0.0) throw InvalidInput("loss values must be non-negative");
    }
}

}  // namespace

ScenarioRanking scenario_rank_per_path(const TrajectoryEnsemble& ens, std::span<const double> losses) {
    check_losses(ens, losses);
    ScenarioRanking out;
    for (std::size_t m = 0; m < ens.size(); ++m) {
        out.ranked.push_back({m, ens.weight(m), losses[m], ens.weight(m) * losses[m]});
    }
    std::stable_sort(out.ranked.begin(), out.ranked.end(),
                     [](const RankedScenario& a, const RankedScenario& b) { return a.score > b.score; });
    out.exceedance = exceedance_curve(losses, ens.weights);
    out.provenance = base_provenance(ForecastKind::trajectory);
    out.provenance.paths = ens.size();
    out.provenance.notes.push_back("rank score = path weight * loss");
    return out;
}

ScenarioRanking scenario_rank_clustered(const TrajectoryEnsemble& ens, std::span<const double> losses,
                                        const ClusterOptions& options) {
    check_losses(ens, losses);
    const std::size_t M = ens.size();
    const std::size_t K = options.k;
    if (K < 1) throw InvalidInput("number of clusters must be >= 1");
    if (K > M) throw InvalidInput("number of clusters k = " + std::to_string(K) + " exceeds paths M = " + std::to_string(M));

    // Standardized (peak, exceedance count, cumulative) features.
    const auto fn = scenario_functionals(ens, options.threshold);
    std::vector<std::array<double, 3>> x(M);
    for (std::size_t m = 0; m < M; ++m) {
        x[m] = {fn.records[m].peak, static_cast<double>(fn.records[m].exceedances), fn.records[m].cumulative};
    }
    for (int j = 0; j < 3; ++j) {
        double mean = 0.0;
        for (const auto& r : x) mean += r[j];
        mean /= static_cast<double>(M);
        double var = 0.0;
        for (const auto& r : x) var += (r[j] - mean) * (r[j] - mean);
        const double sd = std::sqrt(var / static_cast<double>(M));
        for (auto& r : x) r[j] = sd > 0.0 ? (r[j] - mean) / sd : 0.0;
    }
    auto dist = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        for (int j = 0; j < 3; ++j) s += (x[a][j] - x[b][j]) * (x[a][j] - x[b][j]);
        return s;
    };

    // k-means++ style seeding.
    Rng rng(options.seed, streams::kClusterInit);
    std::vector<std::size_t> medoids{rng.index(M)};
    std::vector<bool> chosen(M, false);
    chosen[medoids[0]] = true;
    std::vector<double> d2(M, std::numeric_limits<double>::infinity());
    while (medoids.size() < K) {
        double total = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            d2[m] = std::min(d2[m], dist(m, medoids.back()));
            if (!chosen[m]) total += d2[m];
        }
        std::size_t pick = M;
        if (total > 0.0) {
            double u = rng.uniform() * total;
            for (std::size_t m = 0; m < M; ++m) {
                if (chosen[m] || d2[m] <= 0.0) continue;
                pick = m;
                u -= d2[m];
                if (u <= 0.0) break;
            }
        } else {
            for (std::size_t m = 0; m < M && pick == M; ++m) {
                if (!chosen[m]) pick = m;
            }
        }
        medoids.push_back(pick);
        chosen[pick] = true;
    }

    std::vector<std::size_t> assign(M);
    auto assign_all = [&] {
        for (std::size_t m = 0; m < M; ++m) {
            std::size_t best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < K; ++c) {
                if (medoids[c] == m) {
                    best = c;
                    bd = -1.0;
                    break;
                }
                const double d = dist(m, medoids[c]);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            assign[m] = best;
        }
    };
    assign_all();
    std::size_t iterations = 0;
    for (; iterations < options.max_iterations; ++iterations) {
        bool changed = false;
        for (std::size_t c = 0; c < K; ++c) {
            std::vector<std::size_t> members;
            for (std::size_t m = 0; m < M; ++m) {
                if (assign[m] == c) members.push_back(m);
            }
            std::size_t best = medoids[c];
            double best_cost = std::numeric_limits<double>::infinity();
            for (std::size_t a : members) {
                double cost = 0.0;
                for (std::size_t b : members) cost += dist(a, b);
                if (cost < best_cost - 1e-12 || (std::abs(cost - best_cost) <= 1e-12 && a == medoids[c])) {
                    best_cost = cost;
                    best = a;
                }
            }
            if (best != medoids[c]) {
                medoids[c] = best;
                changed = true;
            }
        }
        if (!changed) break;
        assign_all();
    }

    ScenarioRanking out;
    for (std::size_t c = 0; c < K; ++c) {
        ScenarioCluster cl;
        cl.medoid = medoids[c];
        std::vector<double> l;
        std::vector<double> w;
        for (std::size_t m = 0; m < M; ++m) {
            if (assign[m] != c) continue;
            cl.members.push_back(m);
            cl.weight += ens.weight(m);
            l.push_back(losses[m]);
            w.push_back(ens.weight(m));
        }
        if (cl.members.empty()) continue;
        const EmpiricalDistribution d(l, w);
        cl.mean_loss = d.mean();
        cl.loss_q95 = d.quantile(0.95);
        out.clusters.push_back(std::move(cl));
    }
    std::stable_sort(out.clusters.begin(), out.clusters.end(),
                     [](const ScenarioCluster& a, const ScenarioCluster& b) { return a.mean_loss > b.mean_loss; });
    out.exceedance = exceedance_curve(losses, ens.weights);
    out.provenance = base_provenance(ForecastKind::trajectory);
    out.provenance.paths = M;
    out.provenance.seed = options.seed;
    out.provenance.notes.push_back("k-medoids: squared Euclidean distance on standardized (peak, exceedance count, "
                                   "cumulative) features, k-means++ seeding, " +
                                   std::to_string(iterations) + " iterations (cap " +
                                   std::to_string(options.max_iterations) + ")");
    return out;
}

// ---- task / forecast compatibility ------------------------------------------------------------------------------------

Task parse_task(std::string_view name) {
    if (name == "interval") return Task::interval;
    if (name == "band") return Task::band;
    if (name == "event") return Task::event;
    if (name == "crossing") return Task::crossing;
    if (name == "aggregate") return Task::aggregate;
    if (name == "scenario") return Task::scenario;
    if (name == "var") return Task::var;
    throw InvalidInput("unknown task '" + std::string(name) + "'");
}

std::string_view task_name(Task t) {
    switch (t) {
        case Task::interval: return "interval";
        case Task::band: return "band";
        case Task::event: return "event";
        case Task::crossing: return "crossing";
        case Task::aggregate: return "aggregate";
        case Task::scenario: return "scenario";
        case Task::var: return "var";
    }
    return "unknown";
}

Support task_support(Task task, ForecastKind kind) {
    if (kind == ForecastKind::trajectory) return Support::native;
    switch (task) {
        case Task::interval:
            return kind == ForecastKind::point ? Support::with_assumptions : Support::native;
        case Task::band:
        case Task::aggregate:
            return Support::with_assumptions;
        case Task::event:
        case Task::crossing:
        case Task::scenario:
        case Task::var:
            return kind == ForecastKind::point ? Support::unsupported : Support::with_assumptions;
    }
    return Support::unsupported;
}

std::string_view support_name(Support s) {
    switch (s) {
        case Support::native: return "sufficient";
        case Support::with_assumptions: return "feasible with assumptions";
        case Support::unsupported: return "unsuitable";
    }
    return "unknown";
}

void require_supported(Task task, ForecastKind kind) {
    if (task_support(task, kind) != Support::unsupported) return;
    std::string why;
    switch (task) {
        case Task::event: why = "conformal methods yield coverage bands, not calibrated event probabilities"; break;
        case Task::crossing: why = "a point path gives a single hitting time with no uncertainty"; break;
        case Task::scenario: why = "a single baseline path cannot represent scenario variability"; break;
        case Task::var: why = "a loss quantile needs a predictive loss distribution"; break;
        default: break;
    }
    throw Unsupported("task '" + std::string(task_name(task)) + "' on a " + std::string(kind_name(kind)) +
                      " forecast is unsuitable - cannot reliably support task: " + why);
}

TrajectoryResult lift_to_paths(const ForecastDocument& doc, const Assumptions& a, Provenance& provenance,
                               std::string_view purpose) {
    if (!a.copula) {
        throw MissingAssumption(std::string(purpose) + " from a " + std::string(kind_name(kind_of(doc))) +
                                " forecast requires dependence assumptions (supply a copula)");
    }
    const std::uint64_t seed = require_seed(a, purpose);
    TrajectoryResult lifted;
    if (const auto* q = std::get_if<QuantileForecast>(&doc)) {
        lifted = marginals_to_trajectory(*q, *a.copula, a.paths, seed, LiftOptions{a.tails, a.strict_tails});
        provenance.tail_model = tail_description(a.tails);
    } else if (const auto* p = std::get_if<ParametricForecast>(&doc)) {
        lifted = marginals_to_trajectory(*p, *a.copula, a.paths, seed, a.strict_tails);
    } else {
        throw InvalidInput("only quantile and parametric forecasts can be lifted to paths with a copula");
    }
    provenance.source_type = std::string(kind_name(kind_of(doc)));
    provenance.copula = describe(*a.copula);
    provenance.paths = a.paths;
    provenance.seed = seed;
    if (lifted.clipped_draws > 0) {
        provenance.approximations.push_back(std::to_string(lifted.clipped_draws) +
                                            " copula draws clipped into the quantile grid (no tail model)");
    }
    return lifted;
}

IntervalResult run_intervals(const ForecastDocument& doc, double alpha, const Assumptions& a) {
    require_valid(doc);
    IntervalResult out;
    out.provenance = base_provenance(kind_of(doc));
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, PointForecast>) {
                if (!a.calibration) {
                    throw MissingAssumption("pointwise intervals from a point forecast require calibration data "
                                            "(split conformal)");
                }
                out.intervals = point_to_intervals_conformal(f, *a.calibration, {alpha, ConformalConfig::Mode::per_step, {}});
                out.provenance.approximations.push_back("split conformal, per-step absolute residuals, n = " +
                                                        std::to_string(a.calibration->records.size()));
            } else {
                out.intervals = pointwise_intervals(f, alpha);
                if constexpr (std::is_same_v<T, TrajectoryEnsemble>) out.provenance.paths = f.size();
            }
        },
        doc);
    return out;
}

BandResult run_band(const ForecastDocument& doc, double alpha, const BandOptions& options, const Assumptions& a) {
    require_valid(doc);
    switch (kind_of(doc)) {
        case ForecastKind::trajectory: {
            const auto& ens = std::get<TrajectoryEnsemble>(doc);
            BandResult out{pathwise_band_from_trajectory(ens, alpha, options.center_scale), std::nullopt,
                           base_provenance(ForecastKind::trajectory)};
            out.provenance.paths = ens.size();
            out.provenance.notes.push_back(options.center_scale == CenterScale::median_mad ? "center/scale: median/MAD"
                                                                                            : "center/scale: mean/SD");
            return out;
        }
        case ForecastKind::point: {
            if (!a.calibration) {
                throw MissingAssumption("a pathwise band from a point forecast requires calibration data "
                                        "(sup-norm split conformal)");
            }
            BandResult out{point_to_band_conformal_pathwise(std::get<PointForecast>(doc), *a.calibration,
                                                            {alpha, ConformalConfig::Mode::pathwise_sup_norm, {}}),
                           std::nullopt, base_provenance(ForecastKind::point)};
            out.provenance.approximations.push_back("pathwise split conformal with sup-norm scores, n = " +
                                                    std::to_string(a.calibration->records.size()));
            return out;
        }
        default: break;
    }
    if (a.copula) {
        Provenance prov = base_provenance(kind_of(doc));
        const auto lifted = lift_to_paths(doc, a, prov, "pathwise band");
        BandResult out{pathwise_band_from_trajectory(lifted.ensemble, alpha, options.center_scale), std::nullopt,
                       std::move(prov)};
        return out;
    }
    if (const auto* q = std::get_if<QuantileForecast>(&doc)) return band_sidak(*q, alpha, options.correction);
    return band_sidak(std::get<ParametricForecast>(doc), alpha, options.correction);
}

EventResult run_event(const ForecastDocument& doc, const EventSpec& e, const Assumptions& a) {
    require_valid(doc);
    require_supported(Task::event, kind_of(doc));
    if (const auto* ens = std::get_if<TrajectoryEnsemble>(&doc)) return event_probability(*ens, e);
    validate_event(e, meta_of(doc).horizon);
    Provenance prov;
    const auto lifted = lift_to_paths(doc, a, prov, "event probability");
    auto out = event_probability(lifted.ensemble, e);
    out.provenance = std::move(prov);
    return out;
}

VarResult run_var(const ForecastDocument& doc, double alpha, const Assumptions& a) {
    require_valid(doc);
    require_supported(Task::var, kind_of(doc));
    if (const auto* ens = std::get_if<TrajectoryEnsemble>(&doc)) return value_at_risk(*ens, alpha);
    Provenance prov;
    const auto lifted = lift_to_paths(doc, a, prov, "value at risk");
    auto out = value_at_risk(lifted.ensemble, alpha);
    prov.notes = out.provenance.notes;
    out.provenance = std::move(prov);
    return out;
}

SurvivalResult run_crossing(const ForecastDocument& doc, double threshold, Comparator c, const Assumptions& a) {
    require_valid(doc);
    require_supported(Task::crossing, kind_of(doc));
    if (const auto* ens = std::get_if<TrajectoryEnsemble>(&doc)) return survival_from_trajectories(*ens, threshold, c);
    if (a.copula) {
        Provenance prov;
        const auto lifted = lift_to_paths(doc, a, prov, "threshold crossing");
        auto out = survival_from_trajectories(lifted.ensemble, threshold, c);
        out.provenance = std::move(prov);
        return out;
    }
    if (const auto* q = std::get_if<QuantileForecast>(&doc)) return survival_from_marginals(*q, threshold, c, a.tails);
    return survival_from_marginals(std::get<ParametricForecast>(doc), threshold, c);
}

AggregateResult run_aggregate(const ForecastDocument& doc, std::span<const std::size_t> window, AggregateOutput output,
                              const Assumptions& a) {
    require_valid(doc);
    const std::size_t h = meta_of(doc).horizon;
    require_window(window, h);
    if (const auto* ens = std::get_if<TrajectoryEnsemble>(&doc)) return window_aggregate(*ens, window, output);
    if (const auto* p = std::get_if<PointForecast>(&doc)) return window_aggregate(*p, window, output);

    if (output == AggregateOutput::mean) {
        AggregateResult out;
        out.provenance = base_provenance(kind_of(doc));
        out.provenance.notes.push_back("mean of a sum is the sum of step means; no dependence assumption needed");
        if (const auto* pf = std::get_if<ParametricForecast>(&doc)) {
            for (std::size_t k : window) out.mean += mean(pf->params[k]);
        } else {
            const auto pr = quantile_to_point(std::get<QuantileForecast>(doc), Statistic::mean, a.tails);
            for (std::size_t k : window) out.mean += pr.forecast.values[k];
            for (const auto& w : pr.warnings) out.provenance.approximations.push_back(w);
            out.provenance.tail_model = tail_description(a.tails);
        }
        return out;
    }

    const auto* pf = std::get_if<ParametricForecast>(&doc);
    if (pf && pf->family == Family::gaussian && a.copula && std::holds_alternative<copula::Independence>(*a.copula)) {
        AggregateResult out;
        double mu = 0.0;
        double var = 0.0;
        for (std::size_t k : window) {
            const auto& g = std::get<Gaussian>(pf->params[k]);
            mu += g.mu;
            var += g.sigma * g.sigma;
        }
        out.mean = mu;
        out.closed_form = Gaussian{mu, std::sqrt(var)};
        out.provenance = base_provenance(ForecastKind::parametric);
        out.provenance.copula = "independence";
        out.provenance.notes.push_back("closed form: sum of independent Gaussians");
        return out;
    }
    Provenance prov;
    const auto lifted = lift_to_paths(doc, a, prov, "window aggregate distribution");
    auto out = window_aggregate(lifted.ensemble, window, output);
    out.provenance = std::move(prov);
    return out;
}

ScenarioFunctionals run_scenario(const ForecastDocument& doc, double threshold, const Assumptions& a) {
    require_valid(doc);
    require_supported(Task::scenario, kind_of(doc));
    if (const auto* ens = std::get_if<TrajectoryEnsemble>(&doc)) return scenario_functionals(*ens, threshold);
    Provenance prov;
    const auto lifted = lift_to_paths(doc, a, prov, "scenario generation");
    auto out = scenario_functionals(lifted.ensemble, threshold);
    out.provenance = std::move(prov);
    return out;
}

}  // namespace fforms
