#include "fforms/dists.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "fforms/errors.hpp"
#include "fforms/special.hpp"

namespace fforms {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kTieEps = 1e-12;

std::string fmt_double(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

void require_level(double q) {
    if (!(q > 0.0 && q < 1.0)) {
        throw InvalidInput("quantile level must lie in (0, 1), got " + fmt_double(q));
    }
}

// ---- EmpiricalInterpolant -------------------------------------------------

const std::vector<Breakpoint>& pts(const EmpiricalInterpolant& e) { return e.points; }

double interp_quantile(const EmpiricalInterpolant& e, double q) {
    const auto& p = pts(e);
    if (q < p.front().prob || q > p.back().prob) {
        throw OutOfSupport("quantile level " + fmt_double(q) + " lies outside the grid [" +
                           fmt_double(p.front().prob) + ", " + fmt_double(p.back().prob) +
                           "]; requires retraining or a tail model");
    }
    auto it = std::upper_bound(p.begin(), p.end(), q,
                               [](double v, const Breakpoint& b) { return v < b.prob; });
    if (it == p.end()) return p.back().value;
    if (it == p.begin()) return p.front().value;
    const Breakpoint& hi = *it;
    const Breakpoint& lo = *(it - 1);
    const double w = (q - lo.prob) / (hi.prob - lo.prob);
    return lo.value + w * (hi.value - lo.value);
}

[[noreturn]] void throw_outside_values(const EmpiricalInterpolant& e, double x) {
    throw OutOfSupport("value " + fmt_double(x) + " lies outside the interpolant support [" +
                       fmt_double(e.points.front().value) + ", " +
                       fmt_double(e.points.back().value) + "]; requires a tail model");
}

double interp_cdf(const EmpiricalInterpolant& e, double x) {
    const auto& p = pts(e);
    if (x < p.front().value) {
        if (p.front().prob == 0.0) return 0.0;
        throw_outside_values(e, x);
    }
    if (x >= p.back().value) {
        if (x == p.back().value || p.back().prob == 1.0) return p.back().prob;
        throw_outside_values(e, x);
    }
    // Last breakpoint with value <= x; the highest prob among tied values.
    auto it = std::upper_bound(p.begin(), p.end(), x,
                               [](double v, const Breakpoint& b) { return v < b.value; });
    const Breakpoint& lo = *(it - 1);
    const Breakpoint& hi = *it;
    return lo.prob + (hi.prob - lo.prob) * (x - lo.value) / (hi.value - lo.value);
}

double interp_cdf_left(const EmpiricalInterpolant& e, double x) {
    const auto& p = pts(e);
    if (x <= p.front().value) {
        if (x == p.front().value || p.front().prob == 0.0) return x == p.front().value ? p.front().prob : 0.0;
        throw_outside_values(e, x);
    }
    if (x > p.back().value) {
        if (p.back().prob == 1.0) return 1.0;
        throw_outside_values(e, x);
    }
    // First breakpoint with value >= x; the lowest prob among tied values.
    auto it = std::lower_bound(p.begin(), p.end(), x,
                               [](const Breakpoint& b, double v) { return b.value < v; });
    if (it->value == x) return it->prob;
    const Breakpoint& hi = *it;
    const Breakpoint& lo = *(it - 1);
    return lo.prob + (hi.prob - lo.prob) * (x - lo.value) / (hi.value - lo.value);
}

double interp_density(const EmpiricalInterpolant& e, double x) {
    const auto& p = pts(e);
    if (x < p.front().value || x > p.back().value) {
        const bool closed = x < p.front().value ? p.front().prob == 0.0 : p.back().prob == 1.0;
        if (closed) return 0.0;
        throw_outside_values(e, x);
    }
    auto it = std::upper_bound(p.begin(), p.end(), x,
                               [](double v, const Breakpoint& b) { return v < b.value; });
    if (it == p.end()) return 0.0;
    const Breakpoint& lo = *(it - 1);
    const Breakpoint& hi = *it;
    return (hi.prob - lo.prob) / (hi.value - lo.value);
}

/// Exact integral of the piecewise-linear quantile function over [a, b].
double integrate_quantile(const EmpiricalInterpolant& e, double a, double b) {
    const auto& p = pts(e);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        const double lo = std::max(a, p[i].prob);
        const double hi = std::min(b, p[i + 1].prob);
        if (hi <= lo) continue;
        const double qlo = interp_quantile(e, lo);
        const double qhi = interp_quantile(e, hi);
        total += 0.5 * (qlo + qhi) * (hi - lo);
    }
    return total;
}

// ---- Spliced GPD ----------------------------------------------------------

// Excess at tail survival probability sv; avoids forming 1 - sv in deep tails.
double gpd_excess_at_survival(double xi, double beta, double sv) {
    const double l = std::log(sv);
    if (std::abs(xi) < 1e-12) return -beta * l;
    return beta * std::expm1(-xi * l) / xi;
}

struct Splice {
    const SplicedGpdTails& s;
    double lower_value = 0.0;
    double upper_value = 0.0;

    explicit Splice(const SplicedGpdTails& sp) : s(sp) {
        if (s.lower) lower_value = interp_quantile(s.body, s.lower->attach_prob);
        if (s.upper) upper_value = interp_quantile(s.body, s.upper->attach_prob);
    }

    bool in_lower(double x) const { return s.lower && x < lower_value; }
    bool in_upper(double x) const { return s.upper && x > upper_value; }

    double cdf(double x, bool left) const {
        if (in_lower(x)) {
            return s.lower->attach_prob * (1.0 - gpd::cdf(s.lower->xi, s.lower->beta, lower_value - x));
        }
        if (in_upper(x)) {
            const double a = s.upper->attach_prob;
            return a + (1.0 - a) * gpd::cdf(s.upper->xi, s.upper->beta, x - upper_value);
        }
        return left ? interp_cdf_left(s.body, x) : interp_cdf(s.body, x);
    }

    double quantile(double q) const {
        if (s.lower && q < s.lower->attach_prob) {
            const double a = s.lower->attach_prob;
            return lower_value - gpd_excess_at_survival(s.lower->xi, s.lower->beta, q / a);
        }
        if (s.upper && q > s.upper->attach_prob) {
            const double a = s.upper->attach_prob;
            return upper_value + gpd_excess_at_survival(s.upper->xi, s.upper->beta, (1.0 - q) / (1.0 - a));
        }
        return interp_quantile(s.body, q);
    }

    double density(double x) const {
        if (in_lower(x)) return s.lower->attach_prob * gpd::density(s.lower->xi, s.lower->beta, lower_value - x);
        if (in_upper(x)) {
            return (1.0 - s.upper->attach_prob) * gpd::density(s.upper->xi, s.upper->beta, x - upper_value);
        }
        return interp_density(s.body, x);
    }

    double mean() const {
        const auto& p = s.body.points;
        const double lo = s.lower ? s.lower->attach_prob : 0.0;
        const double hi = s.upper ? s.upper->attach_prob : 1.0;
        if ((!s.lower && p.front().prob != 0.0) || (!s.upper && p.back().prob != 1.0)) {
            throw InvalidInput("mean undefined: an open side of the interpolant has no tail model");
        }
        double total = integrate_quantile(s.body, lo, hi);
        if (s.lower) {
            if (s.lower->xi >= 1.0) throw InvalidInput("mean undefined: lower GPD tail has xi >= 1");
            total += lo * (lower_value - s.lower->beta / (1.0 - s.lower->xi));
        }
        if (s.upper) {
            if (s.upper->xi >= 1.0) throw InvalidInput("mean undefined: upper GPD tail has xi >= 1");
            total += (1.0 - hi) * (upper_value + s.upper->beta / (1.0 - s.upper->xi));
        }
        return total;
    }
};

void check_interpolant(const EmpiricalInterpolant& e, const std::string& prefix,
                       std::vector<std::string>& out) {
    const auto& p = e.points;
    if (p.size() < 2) {
        out.push_back(prefix + "interpolant needs at least 2 breakpoints");
        return;
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!std::isfinite(p[i].prob) || !std::isfinite(p[i].value)) {
            out.push_back(prefix + "non-finite breakpoint at index " + std::to_string(i));
            continue;
        }
        if (p[i].prob < 0.0 || p[i].prob > 1.0) {
            out.push_back(prefix + "breakpoint probability outside [0, 1] at index " + std::to_string(i));
        }
        if (i > 0 && !(p[i].prob > p[i - 1].prob)) {
            out.push_back(prefix + "breakpoint probabilities not ascending at index " + std::to_string(i));
        }
        if (i > 0 && p[i].value < p[i - 1].value) {
            out.push_back(prefix + "breakpoint values decreasing at index " + std::to_string(i));
        }
    }
}

void check_gpd(const Gpd& g, const EmpiricalInterpolant& body, const std::string& side,
               std::vector<std::string>& out) {
    if (!std::isfinite(g.xi)) out.push_back(side + " tail xi not finite");
    if (!(g.beta > 0.0) || !std::isfinite(g.beta)) out.push_back(side + " tail beta must be > 0");
    if (!(g.attach_prob > 0.0 && g.attach_prob < 1.0)) {
        out.push_back(side + " tail attach_prob must lie in (0, 1)");
    } else if (body.points.size() >= 2 &&
               (g.attach_prob < body.points.front().prob || g.attach_prob > body.points.back().prob)) {
        out.push_back(side + " tail attach_prob outside the body grid");
    }
}

double sample_mean(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

void require_finite_samples(std::span<const double> samples) {
    for (double v : samples) {
        if (!std::isfinite(v)) throw InvalidInput("samples must be finite");
    }
}

// ---- Student-t MLE ------------------------------------------------------------

struct TLogLik {
    std::span<const double> x;

    // Mean log-likelihood at (mu, log sigma, log nu).
    double value(const std::array<double, 3>& th) const {
        const double mu = th[0];
        const double sigma = std::exp(th[1]);
        const double nu = std::exp(th[2]);
        double s = 0.0;
        for (double v : x) s += special::student_t_log_pdf((v - mu) / sigma, nu);
        return s / static_cast<double>(x.size()) - std::log(sigma);
    }

    // Gradient w.r.t. (mu, sigma, nu), per sample.
    std::array<double, 3> natural_gradient(double mu, double sigma, double nu) const {
        double gm = 0.0;
        double gs = 0.0;
        double gn = 0.0;
        const double common = 0.5 * special::digamma(0.5 * (nu + 1.0)) - 0.5 * special::digamma(0.5 * nu) -
                              0.5 / nu;
        for (double v : x) {
            const double z = (v - mu) / sigma;
            const double z2 = z * z;
            const double denom = nu + z2;
            gm += (nu + 1.0) * z / (sigma * denom);
            gs += -1.0 / sigma + (nu + 1.0) * z2 / (sigma * denom);
            gn += common - 0.5 * std::log1p(z2 / nu) + (nu + 1.0) * z2 / (2.0 * nu * denom);
        }
        const double n = static_cast<double>(x.size());
        return {gm / n, gs / n, gn / n};
    }

    std::array<double, 3> gradient(const std::array<double, 3>& th) const {
        const double sigma = std::exp(th[1]);
        const double nu = std::exp(th[2]);
        auto g = natural_gradient(th[0], sigma, nu);
        return {g[0], g[1] * sigma, g[2] * nu};
    }
};

bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b, std::array<double, 3>& out) {
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        if (std::abs(a[piv][col]) < 1e-300) return false;
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (int r = col + 1; r < 3; ++r) {
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (int r = 2; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < 3; ++c) s -= a[r][c] * out[c];
        out[r] = s / a[r][r];
    }
    return true;
}

StudentT fit_student_t(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 4) throw InvalidInput("student_t fit needs at least 4 samples");

    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    double mu = sorted[n / 2];
    std::vector<double> dev(n);
    for (std::size_t i = 0; i < n; ++i) dev[i] = std::abs(x[i] - mu);
    std::sort(dev.begin(), dev.end());
    double sigma = 1.4826 * dev[n / 2];
    if (!(sigma > 0.0)) {
        const double m = sample_mean(x);
        double ss = 0.0;
        for (double v : x) ss += (v - m) * (v - m);
        sigma = std::sqrt(ss / static_cast<double>(n));
    }
    double nu = 5.0;

    // EM warm start for (mu, sigma) at the initial nu.
    for (int it = 0; it < 25; ++it) {
        double sw = 0.0;
        double swx = 0.0;
        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double z = (x[i] - mu) / sigma;
            w[i] = (nu + 1.0) / (nu + z * z);
            sw += w[i];
            swx += w[i] * x[i];
        }
        mu = swx / sw;
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += w[i] * (x[i] - mu) * (x[i] - mu);
        sigma = std::sqrt(ss / static_cast<double>(n));
    }

    const TLogLik ll{x};
    std::array<double, 3> th{mu, std::log(sigma), std::log(nu)};
    double f = ll.value(th);
    constexpr int kMaxIter = 500;
    constexpr double kGradTol = 1e-8;
    constexpr double kLogNuMax = 13.8;  // nu ~ 1e6: the sample is effectively Gaussian

    for (int iter = 0; iter < kMaxIter; ++iter) {
        const auto nat = ll.natural_gradient(th[0], std::exp(th[1]), std::exp(th[2]));
        const double gnorm = std::sqrt(nat[0] * nat[0] + nat[1] * nat[1] + nat[2] * nat[2]);
        if (gnorm < kGradTol) {
            return StudentT{th[0], std::exp(th[1]), std::exp(th[2])};
        }
        const auto g = ll.gradient(th);

        // Central-difference Hessian of the analytic gradient.
        std::array<std::array<double, 3>, 3> hess{};
        for (int j = 0; j < 3; ++j) {
            const double h = 1e-5 * std::max(1.0, std::abs(th[j]));
            auto tp = th;
            auto tm = th;
            tp[j] += h;
            tm[j] -= h;
            const auto gp = ll.gradient(tp);
            const auto gm = ll.gradient(tm);
            for (int i = 0; i < 3; ++i) hess[i][j] = (gp[i] - gm[i]) / (2.0 * h);
        }
        for (int i = 0; i < 3; ++i) {
            for (int j = i + 1; j < 3; ++j) hess[i][j] = hess[j][i] = 0.5 * (hess[i][j] + hess[j][i]);
        }
        std::array<double, 3> step{};
        std::array<std::array<double, 3>, 3> neg{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) neg[i][j] = -hess[i][j];
        const bool ok = solve3(neg, g, step);
        const double ascent = step[0] * g[0] + step[1] * g[1] + step[2] * g[2];
        if (!ok || !(ascent > 0.0)) step = g;

        double t = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 60; ++ls) {
            std::array<double, 3> cand{th[0] + t * step[0], th[1] + t * step[1],
                                       std::min(th[2] + t * step[2], kLogNuMax + 1.0)};
            const double fc = ll.value(cand);
            if (std::isfinite(fc) && fc >= f) {
                th = cand;
                f = fc;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if (th[2] > kLogNuMax) {
            throw ConvergenceError("student_t fit diverged: nu grows without bound (sample looks Gaussian)",
                                   {th[0], std::exp(th[1]), std::exp(th[2])});
        }
        if (!improved) break;
    }
    const auto nat = ll.natural_gradient(th[0], std::exp(th[1]), std::exp(th[2]));
    const double gnorm = std::sqrt(nat[0] * nat[0] + nat[1] * nat[1] + nat[2] * nat[2]);
    if (gnorm < kGradTol) return StudentT{th[0], std::exp(th[1]), std::exp(th[2])};
    throw ConvergenceError("student_t fit did not converge (gradient norm " + fmt_double(gnorm) + ")",
                           {th[0], std::exp(th[1]), std::exp(th[2])});
}

// ---- GPD fitting ---------------------------------------------------------------

double gpd_h(double xi, double p) {
    const double l = std::log1p(-p);
    if (std::abs(xi) < 1e-12) return -l;
    return std::expm1(-xi * l) / xi;
}

template <class F>
double golden_min(F&& f, double a, double b, int iters = 100) {
    constexpr double kInvPhi = 0.6180339887498949;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int i = 0; i < iters; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Grimshaw profile likelihood in theta = xi / beta, searched over r with theta = expm1(r) / max.
Gpd gpd_mle(std::span<const double> y, double attach_prob) {
    const double ymax = *std::max_element(y.begin(), y.end());
    const double ybar = sample_mean(y);
    if (!(ymax > 0.0)) throw InvalidInput("insufficient tail data: all exceedances are zero");

    auto xi_hat = [&](double theta) {
        double s = 0.0;
        for (double v : y) s += std::log1p(theta * v);
        return s / static_cast<double>(y.size());
    };
    // Negative profile log-likelihood per sample.
    auto neg_profile = [&](double r) {
        if (r == 0.0) return std::log(ybar) + 1.0;
        const double theta = std::expm1(r) / ymax;
        const double xi = xi_hat(theta);
        if (xi < -1.0) return std::numeric_limits<double>::infinity();
        return std::log(xi / theta) + 1.0 + xi;
    };

    constexpr double kStep = 0.02;
    double best_r = 0.0;
    double best = neg_profile(0.0);
    for (double r = -14.0; r <= 14.0 + 1e-9; r += kStep) {
        const double v = neg_profile(r);
        if (v < best) {
            best = v;
            best_r = r;
        }
    }
    double r = golden_min(neg_profile, best_r - kStep, best_r + kStep);
    if (neg_profile(r) > best) r = best_r;
    if (r == 0.0 || std::abs(r) < 1e-12) return Gpd{0.0, ybar, attach_prob};
    const double theta = std::expm1(r) / ymax;
    const double xi = xi_hat(theta);
    return Gpd{xi, xi / theta, attach_prob};
}

}  // namespace

// ---- public API ----------------------------------------------------------------

std::string_view family_name(Family family) {
    switch (family) {
        case Family::gaussian: return "gaussian";
        case Family::student_t: return "student_t";
        case Family::empirical: return "empirical";
        case Family::spliced_gpd: return "spliced_gpd";
    }
    return "unknown";
}

Family parse_family(std::string_view name) {
    if (name == "gaussian") return Family::gaussian;
    if (name == "student_t") return Family::student_t;
    if (name == "empirical") return Family::empirical;
    if (name == "spliced_gpd") return Family::spliced_gpd;
    throw InvalidInput("unknown family '" + std::string(name) + "'");
}

Family family_of(const FamilyParams& params) {
    return std::visit(overloaded{[](const Gaussian&) { return Family::gaussian; },
                                 [](const StudentT&) { return Family::student_t; },
                                 [](const EmpiricalInterpolant&) { return Family::empirical; },
                                 [](const SplicedGpdTails&) { return Family::spliced_gpd; }},
                      params);
}

std::vector<std::string> check_params(const FamilyParams& params) {
    std::vector<std::string> out;
    std::visit(overloaded{
                   [&](const Gaussian& g) {
                       if (!std::isfinite(g.mu)) out.push_back("mu not finite");
                       if (!(g.sigma > 0.0) || !std::isfinite(g.sigma)) out.push_back("sigma must be > 0");
                   },
                   [&](const StudentT& t) {
                       if (!std::isfinite(t.mu)) out.push_back("mu not finite");
                       if (!(t.sigma > 0.0) || !std::isfinite(t.sigma)) out.push_back("sigma must be > 0");
                       if (!(t.nu > 0.0) || !std::isfinite(t.nu)) out.push_back("nu must be > 0");
                   },
                   [&](const EmpiricalInterpolant& e) { check_interpolant(e, "", out); },
                   [&](const SplicedGpdTails& s) {
                       check_interpolant(s.body, "body: ", out);
                       if (s.lower) check_gpd(*s.lower, s.body, "lower", out);
                       if (s.upper) check_gpd(*s.upper, s.body, "upper", out);
                       if (s.lower && s.upper && !(s.lower->attach_prob < s.upper->attach_prob)) {
                           out.push_back("lower attach_prob must be below upper attach_prob");
                       }
                   }},
               params);
    return out;
}

void require_valid(const FamilyParams& params) {
    const auto issues = check_params(params);
    if (!issues.empty()) {
        throw InvalidInput(std::string("invalid ") + std::string(family_name(family_of(params))) +
                           " parameters: " + issues.front());
    }
}

double cdf(const FamilyParams& params, double x) {
    require_valid(params);
    return std::visit(overloaded{
                          [&](const Gaussian& g) { return special::normal_cdf((x - g.mu) / g.sigma); },
                          [&](const StudentT& t) { return special::student_t_cdf((x - t.mu) / t.sigma, t.nu); },
                          [&](const EmpiricalInterpolant& e) { return interp_cdf(e, x); },
                          [&](const SplicedGpdTails& s) { return Splice(s).cdf(x, false); }},
                      params);
}

double cdf_left(const FamilyParams& params, double x) {
    require_valid(params);
    return std::visit(overloaded{[&](const EmpiricalInterpolant& e) { return interp_cdf_left(e, x); },
                                 [&](const SplicedGpdTails& s) { return Splice(s).cdf(x, true); },
                                 [&](const auto&) { return cdf(params, x); }},
                      params);
}

double quantile(const FamilyParams& params, double q) {
    require_valid(params);
    require_level(q);
    return std::visit(overloaded{
                          [&](const Gaussian& g) { return g.mu + g.sigma * special::normal_quantile(q); },
                          [&](const StudentT& t) { return t.mu + t.sigma * special::student_t_quantile(q, t.nu); },
                          [&](const EmpiricalInterpolant& e) { return interp_quantile(e, q); },
                          [&](const SplicedGpdTails& s) { return Splice(s).quantile(q); }},
                      params);
}

double density(const FamilyParams& params, double x) {
    require_valid(params);
    return std::visit(overloaded{
                          [&](const Gaussian& g) { return special::normal_pdf((x - g.mu) / g.sigma) / g.sigma; },
                          [&](const StudentT& t) { return special::student_t_pdf((x - t.mu) / t.sigma, t.nu) / t.sigma; },
                          [&](const EmpiricalInterpolant& e) { return interp_density(e, x); },
                          [&](const SplicedGpdTails& s) { return Splice(s).density(x); }},
                      params);
}

double log_density(const FamilyParams& params, double x) {
    require_valid(params);
    return std::visit(overloaded{
                          [&](const Gaussian& g) {
                              const double z = (x - g.mu) / g.sigma;
                              return -0.5 * z * z - std::log(g.sigma) - 0.5 * std::log(2.0 * special::kPi);
                          },
                          [&](const StudentT& t) {
                              return special::student_t_log_pdf((x - t.mu) / t.sigma, t.nu) - std::log(t.sigma);
                          },
                          [&](const auto&) { return std::log(density(params, x)); }},
                      params);
}

double mean(const FamilyParams& params) {
    require_valid(params);
    return std::visit(overloaded{
                          [](const Gaussian& g) { return g.mu; },
                          [](const StudentT& t) {
                              if (!(t.nu > 1.0)) throw InvalidInput("mean undefined for student_t with nu <= 1");
                              return t.mu;
                          },
                          [](const EmpiricalInterpolant& e) {
                              if (e.points.front().prob != 0.0 || e.points.back().prob != 1.0) {
                                  throw InvalidInput("mean undefined: interpolant does not cover [0, 1]");
                              }
                              return integrate_quantile(e, 0.0, 1.0);
                          },
                          [](const SplicedGpdTails& s) { return Splice(s).mean(); }},
                      params);
}

EmpiricalInterpolant empirical_cdf(std::span<const double> samples) {
    if (samples.empty()) throw InvalidInput("empirical_cdf needs at least one sample");
    require_finite_samples(samples);
    std::vector<double> x(samples.begin(), samples.end());
    std::sort(x.begin(), x.end());
    const double m = static_cast<double>(x.size());
    EmpiricalInterpolant out;
    out.points.push_back({0.0, x.front()});
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i + 1 < x.size() && x[i + 1] == x[i]) continue;
        out.points.push_back({static_cast<double>(i + 1) / m, x[i]});
    }
    return out;
}

FamilyParams fit_mle(std::span<const double> samples, Family family) {
    require_finite_samples(samples);
    if (family == Family::empirical) return empirical_cdf(samples);
    if (samples.size() < 2) throw InvalidInput("fit needs at least 2 samples");
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    if (*mn == *mx) throw InvalidInput("degenerate sample: all values identical");
    switch (family) {
        case Family::gaussian: {
            const double mu = sample_mean(samples);
            double ss = 0.0;
            for (double v : samples) ss += (v - mu) * (v - mu);
            return Gaussian{mu, std::sqrt(ss / static_cast<double>(samples.size()))};
        }
        case Family::student_t: return fit_student_t(samples);
        case Family::spliced_gpd: {
            SplicedGpdTails s;
            s.body = empirical_cdf(samples);
            s.lower = fit_gpd_tail(samples, TailSide::lower, 0.05);
            s.upper = fit_gpd_tail(samples, TailSide::upper, 0.95);
            return s;
        }
        case Family::empirical: break;
    }
    throw InvalidInput("unsupported family for fit_mle");
}

Gpd fit_gpd_tail(std::span<const double> samples, TailSide side, double attach_prob) {
    require_level(attach_prob);
    if (samples.empty()) throw InvalidInput("insufficient tail data: no samples");
    const EmpiricalInterpolant body = empirical_cdf(samples);
    const double threshold = interp_quantile(body, attach_prob);
    std::vector<double> excess;
    for (double v : samples) {
        if (side == TailSide::upper && v > threshold) excess.push_back(v - threshold);
        if (side == TailSide::lower && v < threshold) excess.push_back(threshold - v);
    }
    if (excess.size() < 10) {
        throw InvalidInput("insufficient tail data: " + std::to_string(excess.size()) +
                           " exceedances beyond the attach point (need 10)");
    }
    return gpd_mle(excess, attach_prob);
}

Gpd fit_gpd_tail(const EmpiricalInterpolant& grid, TailSide side, double attach_prob) {
    require_level(attach_prob);
    require_valid(grid);
    const double anchor = interp_quantile(grid, attach_prob);
    std::vector<double> p_tail;
    std::vector<double> y_tail;
    for (const auto& b : grid.points) {
        if (side == TailSide::upper && b.prob > attach_prob && b.prob < 1.0) {
            p_tail.push_back((b.prob - attach_prob) / (1.0 - attach_prob));
            y_tail.push_back(b.value - anchor);
        }
        if (side == TailSide::lower && b.prob < attach_prob && b.prob > 0.0) {
            p_tail.push_back((attach_prob - b.prob) / attach_prob);
            y_tail.push_back(anchor - b.value);
        }
    }
    if (p_tail.size() < 2) {
        throw InvalidInput("insufficient tail data: need at least 2 grid levels beyond the attach level");
    }
    if (*std::max_element(y_tail.begin(), y_tail.end()) <= 0.0) {
        throw InvalidInput("insufficient tail data: grid quantiles beyond the attach level are flat");
    }
    auto beta_for = [&](double xi) {
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < p_tail.size(); ++i) {
            const double h = gpd_h(xi, p_tail[i]);
            num += y_tail[i] * h;
            den += h * h;
        }
        return num / den;
    };
    auto sse = [&](double xi) {
        const double beta = beta_for(xi);
        if (!(beta > 0.0)) return std::numeric_limits<double>::infinity();
        double s = 0.0;
        for (std::size_t i = 0; i < p_tail.size(); ++i) {
            const double r = y_tail[i] - beta * gpd_h(xi, p_tail[i]);
            s += r * r;
        }
        return s;
    };
    constexpr double kLo = -0.95;
    constexpr double kHi = 5.0;
    constexpr double kStep = 0.01;
    double best_xi = 0.0;
    double best = sse(0.0);
    for (double xi = kLo; xi <= kHi + 1e-12; xi += kStep) {
        const double v = sse(xi);
        if (v < best) {
            best = v;
            best_xi = xi;
        }
    }
    double xi = golden_min(sse, std::max(kLo, best_xi - kStep), std::min(kHi, best_xi + kStep));
    if (sse(xi) > best) xi = best_xi;
    return Gpd{xi, beta_for(xi), attach_prob};
}

namespace gpd {

double cdf(double xi, double beta, double excess) {
    if (excess <= 0.0) return 0.0;
    const double z = excess / beta;
    if (std::abs(xi) < 1e-12) return -std::expm1(-z);
    const double arg = xi * z;
    if (arg <= -1.0) return 1.0;  // beyond the finite upper endpoint when xi < 0
    return -std::expm1(-std::log1p(arg) / xi);
}

double quantile(double xi, double beta, double p) {
    if (p <= 0.0) return 0.0;
    return beta * gpd_h(xi, p);
}

double density(double xi, double beta, double excess) {
    if (excess < 0.0) return 0.0;
    const double z = excess / beta;
    if (std::abs(xi) < 1e-12) return std::exp(-z) / beta;
    const double arg = xi * z;
    if (arg <= -1.0) return 0.0;
    return std::exp(-(1.0 / xi + 1.0) * std::log1p(arg)) / beta;
}

}  // namespace gpd

}  // namespace fforms
