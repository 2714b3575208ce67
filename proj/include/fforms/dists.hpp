#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fforms {

enum class Family { gaussian, student_t, empirical, spliced_gpd };

std::string_view family_name(Family family);
/// Accepts the JSON tags "gaussian", "student_t", "empirical", "spliced_gpd".
Family parse_family(std::string_view name);

struct Gaussian {
    double mu = 0.0;
    double sigma = 1.0;
    bool operator==(const Gaussian&) const = default;
};

struct StudentT {
    double mu = 0.0;
    double sigma = 1.0;
    double nu = 1.0;
    bool operator==(const StudentT&) const = default;
};

struct Breakpoint {
    double prob = 0.0;
    double value = 0.0;
    bool operator==(const Breakpoint&) const = default;
};

/// Piecewise-linear quantile function through (prob, value) breakpoints.
///
/// Probabilities are strictly ascending, values non-decreasing; equal values
/// encode an atom (a jump of the CDF). Queries outside [first.prob, last.prob]
/// (or the matching value range) are refused with OutOfSupport, except that a
/// breakpoint at prob 0 or 1 closes the support on that side.
struct EmpiricalInterpolant {
    std::vector<Breakpoint> points;
    bool operator==(const EmpiricalInterpolant&) const = default;
};

/// Generalized Pareto tail: excess y over the attach point has CDF
/// 1 - (1 + xi*y/beta)^(-1/xi). attach_prob is the CDF level at the splice.
struct Gpd {
    double xi = 0.0;
    double beta = 1.0;
    double attach_prob = 0.5;
    bool operator==(const Gpd&) const = default;
};

/// Interpolant body with GPD tails spliced continuously at the attach levels.
/// A side without a tail must be closed by the body (prob 0 or 1 breakpoint)
/// for queries on that side to succeed.
struct SplicedGpdTails {
    EmpiricalInterpolant body;
    std::optional<Gpd> lower;
    std::optional<Gpd> upper;
    bool operator==(const SplicedGpdTails&) const = default;
};

using FamilyParams = std::variant<Gaussian, StudentT, EmpiricalInterpolant, SplicedGpdTails>;

Family family_of(const FamilyParams& params);

/// Invariant violations of a parameter record; empty when valid.
std::vector<std::string> check_params(const FamilyParams& params);
/// Throws InvalidInput listing the first violation.
void require_valid(const FamilyParams& params);

double cdf(const FamilyParams& params, double x);
/// Left limit F(x-); differs from cdf only at atoms of an interpolant.
double cdf_left(const FamilyParams& params, double x);
double quantile(const FamilyParams& params, double q);
double density(const FamilyParams& params, double x);
double log_density(const FamilyParams& params, double x);
/// Throws InvalidInput("mean undefined") when the mean does not exist.
double mean(const FamilyParams& params);

/// Maximum-likelihood fit. Gaussian is closed form (biased variance); StudentT
/// uses Newton ascent on (mu, log sigma, log nu) until the per-sample gradient
/// norm drops below 1e-8. Empirical returns empirical_cdf; spliced_gpd fits
/// GPD tails beyond the 5% and 95% levels of the empirical body.
FamilyParams fit_mle(std::span<const double> samples, Family family);

/// Interpolant reproducing F(x) = #{samples <= x} / M at every sample point.
EmpiricalInterpolant empirical_cdf(std::span<const double> samples);

enum class TailSide { lower, upper };

/// GPD fit by maximum likelihood on exceedances beyond the attach level of the
/// empirical interpolant of the samples. Lower tails are fit on negated
/// exceedances. Requires at least 10 exceedances.
Gpd fit_gpd_tail(std::span<const double> samples, TailSide side, double attach_prob);

/// GPD fit by least squares on the grid quantiles lying strictly beyond
/// attach_prob (at least two required).
Gpd fit_gpd_tail(const EmpiricalInterpolant& grid, TailSide side, double attach_prob);

namespace gpd {
double cdf(double xi, double beta, double excess);
double quantile(double xi, double beta, double p);
double density(double xi, double beta, double excess);
}  // namespace gpd

}  // namespace fforms
