#include "fforms/convert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fforms/errors.hpp"
#include "fforms/rng.hpp"
#include "fforms/special.hpp"
#include "parallel.hpp"

namespace fforms {

namespace {

constexpr double kClipEps = 1e-9;

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

void require_levels(std::span<const double> levels) {
    if (levels.empty()) throw InvalidInput("at least one quantile level is required");
    for (std::size_t l = 0; l < levels.size(); ++l) {
        if (!(levels[l] > 0.0 && levels[l] < 1.0)) throw InvalidInput("quantile level outside (0, 1): " + fmt(levels[l]));
        if (l > 0 && !(levels[l] > levels[l - 1])) {
            throw InvalidInput("levels not ascending at index " + std::to_string(l));
        }
    }
}

std::vector<double> weights_or_empty(const TrajectoryEnsemble& ens) { return ens.weights; }

bool uniform_weights(const TrajectoryEnsemble& ens) {
    if (ens.weights.empty()) return true;
    const double w0 = ens.weights.front();
    return std::all_of(ens.weights.begin(), ens.weights.end(), [&](double w) { return std::abs(w - w0) < 1e-15; });
}

/// Weighted analogue of empirical_cdf: breakpoints at the cumulative weights.
EmpiricalInterpolant weighted_interpolant(const EmpiricalDistribution& d) {
    EmpiricalInterpolant out;
    const auto& v = d.values();
    out.points.push_back({0.0, v.front()});
    double cum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        cum += d.weights()[i];
        if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
        const double p = i + 1 == v.size() ? 1.0 : cum;
        if (p > out.points.back().prob) {
            out.points.push_back({p, v[i]});
        } else {
            out.points.back().value = v[i];
        }
    }
    return out;
}

std::size_t find_level(std::span<const double> levels, double q) {
    for (std::size_t l = 0; l < levels.size(); ++l) {
        if (std::abs(levels[l] - q) < 1e-12) return l;
    }
    throw InvalidInput("level " + fmt(q) + " is not present in the quantile grid");
}

/// Grid interpolation of one step at level q, refusing levels outside the hull.
double interpolate_step(const QuantileForecast& f, std::size_t k, double q) {
    const auto& lv = f.levels;
    if (q < lv.front() - 1e-12 || q > lv.back() + 1e-12) {
        throw OutOfSupport("level " + fmt(q) + " lies outside the quantile grid [" + fmt(lv.front()) + ", " +
                           fmt(lv.back()) + "]; requires retraining or tail model");
    }
    EmpiricalInterpolant e;
    for (std::size_t l = 0; l < lv.size(); ++l) e.points.push_back({lv[l], f.values(k, l)});
    if (lv.size() == 1) return f.values(k, 0);
    return quantile(e, std::clamp(q, lv.front(), lv.back()));
}

template <class F>
double golden_min(F&& fn, double a, double b, int iters = 120) {
    constexpr double kInvPhi = 0.6180339887498949;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = fn(c);
    double fd = fn(d);
    for (int i = 0; i < iters; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = fn(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = fn(d);
        }
    }
    return 0.5 * (a + b);
}

/// Weighted least squares of y on (1, x): returns (intercept, slope, residual SS).
struct LineFit {
    double intercept;
    double slope;
    double sse;
};

LineFit weighted_line(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
    double sw = 0.0;
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    const double mx = sx / sw;
    const double my = sy / sw;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - intercept - slope * x[i];
        sse += w[i] * r * r;
    }
    return {intercept, slope, sse};
}

std::size_t parameter_count(Family family) {
    switch (family) {
        case Family::gaussian: return 2;
        case Family::student_t: return 3;
        default: break;
    }
    throw InvalidInput("quantile regression supports the gaussian and student_t families");
}

struct StepFit {
    FamilyParams params;
    double objective;
};

StepFit regress_step(std::span<const double> levels, std::span<const double> values, Family family, WeightMode mode,
                     int iterations) {
    const std::size_t L = levels.size();
    std::vector<double> w(L, 1.0);
    std::vector<double> z(L);
    const double spread = values.back() - values.front();
    if (!(spread > 0.0)) throw InvalidInput("degenerate quantiles: all grid values equal");

    auto fit_fixed = [&](const std::vector<double>& weights) -> StepFit {
        if (family == Family::gaussian) {
            for (std::size_t l = 0; l < L; ++l) z[l] = special::normal_quantile(levels[l]);
            const auto line = weighted_line(z, values, weights);
            if (!(line.slope > 0.0)) {
                throw ConvergenceError("quantile regression produced non-positive sigma", {line.intercept, line.slope});
            }
            return {Gaussian{line.intercept, line.slope}, line.sse};
        }
        // Student-t: closed-form (mu, sigma) for each nu, 1-D search over log nu.
        std::vector<double> t(L);
        auto profile = [&](double log_nu) {
            const double nu = std::exp(log_nu);
            for (std::size_t l = 0; l < L; ++l) t[l] = special::student_t_quantile(levels[l], nu);
            const auto line = weighted_line(t, values, weights);
            return line.slope > 0.0 ? line.sse : std::numeric_limits<double>::infinity();
        };
        constexpr double kLo = -1.6;  // nu ~ 0.2
        constexpr double kHi = 9.2;   // nu ~ 1e4
        constexpr double kStep = 0.1;
        double best_x = kLo;
        double best = profile(kLo);
        for (double x = kLo + kStep; x <= kHi + 1e-12; x += kStep) {
            const double v = profile(x);
            if (v < best) {
                best = v;
                best_x = x;
            }
        }
        double x = golden_min(profile, std::max(kLo, best_x - kStep), std::min(kHi, best_x + kStep));
        if (profile(x) > best) x = best_x;
        const double nu = std::exp(x);
        for (std::size_t l = 0; l < L; ++l) t[l] = special::student_t_quantile(levels[l], nu);
        const auto line = weighted_line(t, values, weights);
        if (x >= kHi - kStep) {
            throw ConvergenceError("quantile regression: nu runs to the search bound (grid looks Gaussian)",
                                   {line.intercept, line.slope, nu});
        }
        return {StudentT{line.intercept, line.slope, nu}, line.sse};
    };

    StepFit fit = fit_fixed(w);
    if (mode == WeightMode::asymptotic) {
        for (int it = 0; it < iterations; ++it) {
            for (std::size_t l = 0; l < L; ++l) {
                const double q = levels[l];
                const double dens = density(fit.params, quantile(fit.params, q));
                w[l] = dens * dens / (q * (1.0 - q));
            }
            // Rescale so weights average to one; the minimizer is unchanged.
            double s = 0.0;
            for (double v : w) s += v;
            for (double& v : w) v *= static_cast<double>(L) / s;
            fit = fit_fixed(w);
        }
    }
    return fit;
}

/// Default attach levels: third-outermost grid level on each side.
std::pair<double, double> attach_levels(const QuantileForecast& f, const TailPolicy& tails) {
    const auto& lv = f.levels;
    const std::size_t L = lv.size();
    if (!tails.lower_attach || !tails.upper_attach) {
        if (L < 6) {
            throw InvalidInput("gpd tails need at least 6 grid levels for default attach points (got " +
                               std::to_string(L) + ")");
        }
    }
    const double lo = tails.lower_attach.value_or(lv[2]);
    const double hi = tails.upper_attach.value_or(lv[L - 3]);
    if (!(lo < hi)) throw InvalidInput("lower attach level must be below upper attach level");
    return {lo, hi};
}

SplicedGpdTails splice_step(const EmpiricalInterpolant& body, double lower_attach, double upper_attach) {
    SplicedGpdTails s;
    s.body = body;
    const auto& p = body.points;
    // Fit at the attach level, then move the threshold out to the grid edge:
    // a GPD(xi, beta) excess above u is GPD(xi, beta + xi * (v - u)) above v > u.
    {
        const Gpd g = fit_gpd_tail(body, TailSide::lower, lower_attach);
        const double shift = quantile(body, lower_attach) - p.front().value;
        const double beta = g.beta + g.xi * shift;
        if (!(beta > 0.0)) throw InvalidInput("lower GPD tail ends inside the quantile grid");
        s.lower = Gpd{g.xi, beta, p.front().prob};
    }
    {
        const Gpd g = fit_gpd_tail(body, TailSide::upper, upper_attach);
        const double shift = p.back().value - quantile(body, upper_attach);
        const double beta = g.beta + g.xi * shift;
        if (!(beta > 0.0)) throw InvalidInput("upper GPD tail ends inside the quantile grid");
        s.upper = Gpd{g.xi, beta, p.back().prob};
    }
    return s;
}

/// Probability range over which a marginal can be inverted without a tail model.
std::pair<double, double> invertible_range(const FamilyParams& p) {
    if (const auto* e = std::get_if<EmpiricalInterpolant>(&p)) {
        return {e->points.front().prob, e->points.back().prob};
    }
    if (const auto* s = std::get_if<SplicedGpdTails>(&p)) {
        return {s->lower ? 0.0 : s->body.points.front().prob, s->upper ? 1.0 : s->body.points.back().prob};
    }
    return {0.0, 1.0};
}

}  // namespace

Statistic parse_statistic(std::string_view name) {
    if (name == "mean") return Statistic::mean;
    if (name == "median") return Statistic::median;
    throw InvalidInput("unknown statistic '" + std::string(name) + "' (expected mean or median)");
}

BootstrapMode parse_bootstrap_mode(std::string_view name) {
    if (name == "rows" || name == "none") return BootstrapMode::rows;
    if (name == "by_lead") return BootstrapMode::by_lead;
    if (name == "pooled") return BootstrapMode::pooled;
    throw InvalidInput("unknown bootstrap mode '" + std::string(name) + "' (expected rows, by_lead or pooled)");
}

QuantileForecast traj_to_quantile(const TrajectoryEnsemble& ens, std::span<const double> levels) {
    require_valid(ForecastDocument{ens});
    require_levels(levels);
    const std::size_t h = ens.paths.cols();
    QuantileForecast out{ens.meta, {levels.begin(), levels.end()}, Matrix(h, levels.size())};
    const auto w = weights_or_empty(ens);
    for (std::size_t k = 0; k < h; ++k) {
        const auto col = ens.paths.column(k);
        const EmpiricalDistribution d(col, w);
        std::vector<double> row(levels.size());
        for (std::size_t l = 0; l < levels.size(); ++l) row[l] = d.quantile(levels[l]);
        const auto sorted = rearrange_monotone(row);
        std::copy(sorted.begin(), sorted.end(), out.values.row(k).begin());
    }
    return out;
}

ParametricForecast traj_to_parametric(const TrajectoryEnsemble& ens, Family family) {
    require_valid(ForecastDocument{ens});
    const std::size_t h = ens.paths.cols();
    ParametricForecast out{ens.meta, family, {}};
    const bool uniform = uniform_weights(ens);
    if (!uniform && (family == Family::student_t || family == Family::spliced_gpd)) {
        throw InvalidInput("weighted ensembles support only gaussian and empirical fits");
    }
    for (std::size_t k = 0; k < h; ++k) {
        const auto col = ens.paths.column(k);
        try {
            if (uniform) {
                out.params.push_back(fit_mle(col, family));
            } else {
                const EmpiricalDistribution d(col, ens.weights);
                if (family == Family::empirical) {
                    out.params.push_back(weighted_interpolant(d));
                } else {
                    const double mu = d.mean();
                    double var = 0.0;
                    for (std::size_t i = 0; i < d.size(); ++i) var += d.weights()[i] * (d.values()[i] - mu) * (d.values()[i] - mu);
                    if (!(var > 0.0)) throw InvalidInput("degenerate sample: all values identical");
                    out.params.push_back(Gaussian{mu, std::sqrt(var)});
                }
            }
        } catch (const ConvergenceError& e) {
            throw ConvergenceError("step " + std::to_string(k) + ": " + e.what(), e.last_iterate());
        } catch (const InvalidInput& e) {
            throw InvalidInput("step " + std::to_string(k) + ": " + e.what());
        }
    }
    return out;
}

PointForecast traj_to_point(const TrajectoryEnsemble& ens, Statistic statistic) {
    require_valid(ForecastDocument{ens});
    const std::size_t h = ens.paths.cols();
    PointForecast out{ens.meta, std::vector<double>(h)};
    for (std::size_t k = 0; k < h; ++k) {
        const EmpiricalDistribution d(ens.paths.column(k), ens.weights);
        out.values[k] = statistic == Statistic::mean ? d.mean() : d.quantile(0.5);
    }
    return out;
}

QuantileForecast parametric_to_quantile(const ParametricForecast& f, std::span<const double> levels) {
    require_valid(ForecastDocument{f});
    require_levels(levels);
    const std::size_t h = f.params.size();
    QuantileForecast out{f.meta, {levels.begin(), levels.end()}, Matrix(h, levels.size())};
    for (std::size_t k = 0; k < h; ++k) {
        for (std::size_t l = 0; l < levels.size(); ++l) out.values(k, l) = quantile(f.params[k], levels[l]);
    }
    return out;
}

PointForecast parametric_to_point(const ParametricForecast& f, Statistic statistic) {
    require_valid(ForecastDocument{f});
    PointForecast out{f.meta, std::vector<double>(f.params.size())};
    for (std::size_t k = 0; k < f.params.size(); ++k) {
        out.values[k] = statistic == Statistic::mean ? mean(f.params[k]) : quantile(f.params[k], 0.5);
    }
    return out;
}

TrajectoryResult marginals_to_trajectory(const ParametricForecast& f, const CopulaSpec& copula, std::size_t paths,
                                         std::uint64_t seed, bool strict_tails) {
    require_valid(ForecastDocument{f});
    const std::size_t h = f.params.size();
    const Matrix u = sample_copula(copula, paths, h, seed);

    std::vector<std::pair<double, double>> ranges(h);
    for (std::size_t k = 0; k < h; ++k) ranges[k] = invertible_range(f.params[k]);

    TrajectoryResult out;
    out.ensemble.meta = f.meta;
    out.ensemble.paths = Matrix(paths, h);
    std::vector<std::size_t> clipped(paths, 0);
    detail::parallel_for(paths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t m = begin; m < end; ++m) {
            for (std::size_t k = 0; k < h; ++k) {
                double v = u(m, k);
                const auto [lo, hi] = ranges[k];
                if (v < lo || v > hi) {
                    if (strict_tails) {
                        throw OutOfSupport("copula draw " + fmt(v) + " at step " + std::to_string(k) +
                                           " falls outside the quantile grid [" + fmt(lo) + ", " + fmt(hi) +
                                           "] and strict tails are on; supply a tail model");
                    }
                    v = std::clamp(v, lo + kClipEps, hi - kClipEps);
                    ++clipped[m];
                }
                out.ensemble.paths(m, k) = quantile(f.params[k], v);
            }
        }
    });
    for (std::size_t c : clipped) out.clipped_draws += c;
    return out;
}

TrajectoryResult marginals_to_trajectory(const QuantileForecast& f, const CopulaSpec& copula, std::size_t paths,
                                         std::uint64_t seed, const LiftOptions& options) {
    return marginals_to_trajectory(quantile_to_interpolated_cdf(f, options.tails), copula, paths, seed,
                                   options.strict_tails);
}

ParametricForecast quantile_to_parametric_moment_match(const QuantileForecast& f, std::pair<double, double> levels) {
    require_valid(ForecastDocument{f});
    auto [q1, q2] = levels;
    if (std::abs(q1 - q2) < 1e-15) {
        throw InvalidInput("underdetermined: a single quantile level cannot identify both mu and sigma");
    }
    if (q1 > q2) std::swap(q1, q2);
    const std::size_t l1 = find_level(f.levels, q1);
    const std::size_t l2 = find_level(f.levels, q2);
    const double z1 = special::normal_quantile(q1);
    const double z2 = special::normal_quantile(q2);
    ParametricForecast out{f.meta, Family::gaussian, {}};
    for (std::size_t k = 0; k < f.values.rows(); ++k) {
        const double a = f.values(k, l1);
        const double b = f.values(k, l2);
        if (!(b > a)) throw InvalidInput("non-increasing quantiles at step " + std::to_string(k));
        const double mu = (b * z1 - a * z2) / (z1 - z2);
        const double sigma = (b - a) / (z2 - z1);
        out.params.push_back(Gaussian{mu, sigma});
    }
    return out;
}

RegressionFit quantile_to_parametric_regression(const QuantileForecast& f, Family family, WeightMode mode,
                                                int iterations) {
    require_valid(ForecastDocument{f});
    const std::size_t d = parameter_count(family);
    const std::size_t L = f.levels.size();
    if (L < d) {
        throw InvalidInput("underdetermined: " + std::to_string(L) + " quantile levels cannot identify the " +
                           std::to_string(d) + " parameters of " + std::string(family_name(family)));
    }
    if (iterations < 0) throw InvalidInput("iterations must be >= 0");
    RegressionFit out{{f.meta, family, {}}, {}};
    for (std::size_t k = 0; k < f.values.rows(); ++k) {
        const auto row = f.values.row(k);
        try {
            auto fit = regress_step(f.levels, row, family, mode, iterations);
            out.forecast.params.push_back(std::move(fit.params));
            out.objective.push_back(fit.objective);
        } catch (const ConvergenceError& e) {
            throw ConvergenceError("step " + std::to_string(k) + ": " + e.what(), e.last_iterate());
        } catch (const InvalidInput& e) {
            throw InvalidInput("step " + std::to_string(k) + ": " + e.what());
        }
    }
    return out;
}

ParametricForecast quantile_to_interpolated_cdf(const QuantileForecast& f, const TailPolicy& tails) {
    require_valid(ForecastDocument{f});
    if (f.levels.size() < 2) throw InvalidInput("interpolation needs at least 2 quantile levels");
    const bool gpd = tails.kind == TailPolicy::Kind::gpd;
    ParametricForecast out{f.meta, gpd ? Family::spliced_gpd : Family::empirical, {}};
    std::pair<double, double> attach{};
    if (gpd) attach = attach_levels(f, tails);
    for (std::size_t k = 0; k < f.values.rows(); ++k) {
        EmpiricalInterpolant body;
        for (std::size_t l = 0; l < f.levels.size(); ++l) body.points.push_back({f.levels[l], f.values(k, l)});
        if (gpd) {
            try {
                out.params.push_back(splice_step(body, attach.first, attach.second));
            } catch (const InvalidInput& e) {
                throw InvalidInput("step " + std::to_string(k) + ": " + e.what());
            }
        } else {
            out.params.push_back(std::move(body));
        }
    }
    return out;
}

PointResult quantile_to_point(const QuantileForecast& f, Statistic statistic, const TailPolicy& tails) {
    require_valid(ForecastDocument{f});
    const std::size_t h = f.values.rows();
    PointResult out{{f.meta, std::vector<double>(h)}, {}};
    if (statistic == Statistic::median) {
        for (std::size_t k = 0; k < h; ++k) out.forecast.values[k] = interpolate_step(f, k, 0.5);
        return out;
    }
    if (f.levels.size() < 2) throw InvalidInput("mean from quantiles needs at least 2 levels");
    if (tails.kind == TailPolicy::Kind::gpd) {
        const auto lifted = quantile_to_interpolated_cdf(f, tails);
        for (std::size_t k = 0; k < h; ++k) out.forecast.values[k] = mean(lifted.params[k]);
        out.warnings.push_back("mean tail mass taken from fitted GPD tails");
        return out;
    }
    const auto& q = f.levels;
    const std::size_t L = q.size();
    for (std::size_t k = 0; k < h; ++k) {
        double s = 0.0;
        for (std::size_t l = 0; l + 1 < L; ++l) s += 0.5 * (f.values(k, l) + f.values(k, l + 1)) * (q[l + 1] - q[l]);
        s += q.front() * f.values(k, 0) + (1.0 - q.back()) * f.values(k, L - 1);
        out.forecast.values[k] = s;
    }
    out.warnings.push_back("mass outside [" + fmt(q.front()) + ", " + fmt(q.back()) +
                           "] approximated by nearest-endpoint extension");
    return out;
}

std::size_t conformal_rank(std::size_t n, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
    const double x = (static_cast<double>(n) + 1.0) * (1.0 - alpha);
    const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(x - 1e-9)));
    if (rank > n) {
        throw InvalidInput("insufficient calibration records: conformal rank " + std::to_string(rank) +
                           " exceeds n = " + std::to_string(n) + " at alpha = " + fmt(alpha));
    }
    return rank;
}

namespace {

/// Signed residuals y - yhat, n x h; requires point forecasts of horizon h.
Matrix calibration_residuals(const CalibrationSet& cal, std::size_t h) {
    if (cal.records.empty()) throw InvalidInput("calibration set is empty");
    require_valid(cal);
    Matrix r(cal.records.size(), h);
    for (std::size_t i = 0; i < cal.records.size(); ++i) {
        const auto* p = std::get_if<PointForecast>(&cal.records[i].forecast);
        if (!p) throw InvalidInput("calibration record " + std::to_string(i) + " is not a point forecast");
        if (p->values.size() != h) {
            throw InvalidInput("calibration record " + std::to_string(i) + " horizon differs from the forecast");
        }
        for (std::size_t k = 0; k < h; ++k) r(i, k) = cal.records[i].realization[k] - p->values[k];
    }
    return r;
}

double kth_smallest(std::vector<double> v, std::size_t rank) {
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(rank - 1), v.end());
    return v[rank - 1];
}

}  // namespace

IntervalSet point_to_intervals_conformal(const PointForecast& f, const CalibrationSet& cal,
                                         const ConformalConfig& cfg) {
    require_valid(ForecastDocument{f});
    const std::size_t h = f.values.size();
    const Matrix r = calibration_residuals(cal, h);
    const std::size_t n = r.rows();
    const std::size_t rank = conformal_rank(n, cfg.alpha);
    IntervalSet out{std::vector<double>(h), std::vector<double>(h)};
    for (std::size_t k = 0; k < h; ++k) {
        std::vector<double> a(n);
        for (std::size_t i = 0; i < n; ++i) a[i] = std::abs(r(i, k));
        const double q = kth_smallest(std::move(a), rank);
        out.lower[k] = f.values[k] - q;
        out.upper[k] = f.values[k] + q;
    }
    return out;
}

PathwiseBand point_to_band_conformal_pathwise(const PointForecast& f, const CalibrationSet& cal,
                                              const ConformalConfig& cfg) {
    require_valid(ForecastDocument{f});
    const std::size_t h = f.values.size();
    const Matrix r = calibration_residuals(cal, h);
    const std::size_t n = r.rows();
    const std::size_t rank = conformal_rank(n, cfg.alpha);

    std::vector<double> w = cfg.scale_weights;
    if (w.empty()) {
        w.resize(h);
        for (std::size_t k = 0; k < h; ++k) {
            std::vector<double> a(n);
            for (std::size_t i = 0; i < n; ++i) a[i] = std::abs(r(i, k));
            w[k] = std::max(EmpiricalDistribution(a).quantile(0.5), 1e-12);
        }
    } else {
        if (w.size() != h) throw InvalidInput("scale_weights length differs from horizon");
        for (double v : w) {
            if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("scale_weights must be positive");
        }
    }
    std::vector<double> scores(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < h; ++k) scores[i] = std::max(scores[i], std::abs(r(i, k)) / w[k]);
    }
    const double c = kth_smallest(std::move(scores), rank);
    PathwiseBand band{f.values, w, c, std::vector<double>(h), std::vector<double>(h)};
    for (std::size_t k = 0; k < h; ++k) {
        band.lower[k] = f.values[k] - c * w[k];
        band.upper[k] = f.values[k] + c * w[k];
    }
    return band;
}

TrajectoryEnsemble point_to_trajectory_bootstrap(const PointForecast& f, const CalibrationSet& cal, std::size_t paths,
                                                 BootstrapMode mode, std::uint64_t seed) {
    require_valid(ForecastDocument{f});
    if (paths < 1) throw InvalidInput("number of paths must be >= 1");
    const std::size_t h = f.values.size();
    const Matrix r = calibration_residuals(cal, h);
    const std::size_t n = r.rows();
    TrajectoryEnsemble out{f.meta, Matrix(paths, h), {}};
    detail::parallel_for(paths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t m = begin; m < end; ++m) {
            Rng rng(seed, m);
            switch (mode) {
                case BootstrapMode::rows: {
                    const std::size_t i = rng.index(n);
                    for (std::size_t k = 0; k < h; ++k) out.paths(m, k) = f.values[k] + r(i, k);
                    break;
                }
                case BootstrapMode::by_lead:
                    for (std::size_t k = 0; k < h; ++k) out.paths(m, k) = f.values[k] + r(rng.index(n), k);
                    break;
                case BootstrapMode::pooled:
                    for (std::size_t k = 0; k < h; ++k) {
                        const std::size_t j = rng.index(n * h);
                        out.paths(m, k) = f.values[k] + r(j / h, j % h);
                    }
                    break;
            }
        }
    });
    return out;
}

QuantileForecast intervals_to_quantile(const HorizonMeta& meta, const IntervalSet& intervals, double alpha) {
    const std::size_t h = intervals.lower.size();
    QuantileForecast out{meta, {alpha / 2.0, 1.0 - alpha / 2.0}, Matrix(h, 2)};
    for (std::size_t k = 0; k < h; ++k) {
        out.values(k, 0) = intervals.lower[k];
        out.values(k, 1) = intervals.upper[k];
    }
    return out;
}

}  // namespace fforms
