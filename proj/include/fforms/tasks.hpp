#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fforms/convert.hpp"
#include "fforms/core.hpp"

namespace fforms {

// ---- events -------------------------------------------------------------------------

enum class Functional { sum, max, min, first_crossing };
enum class Comparator { ge, le };

Functional parse_functional(std::string_view name);
std::string_view functional_name(Functional f);
Comparator parse_comparator(std::string_view name);  // "ge"/">=" or "le"/"<="
std::string_view comparator_name(Comparator c);

/// Window indices are 0-based here; files and the CLI use 1-based steps.
/// For first_crossing the event is "some step of the window satisfies y > c"
/// (or <, per comparator) - i.e. the hitting time falls inside the window.
struct EventSpec {
    std::vector<std::size_t> window;
    Functional functional = Functional::sum;
    Comparator comparator = Comparator::ge;
    double threshold = 0.0;
};

void validate_event(const EventSpec& e, std::size_t h);
bool compare(double value, Comparator c, double threshold);
/// Window functional value; for first_crossing, 1 if the window contains a crossing else 0.
double functional_value(std::span<const double> path, const EventSpec& e);
bool event_holds(std::span<const double> path, const EventSpec& e);

/// Contiguous 0-based window [first, last].
std::vector<std::size_t> contiguous_window(std::size_t first, std::size_t last);

// ---- provenance ---------------------------------------------------------------------------

/// Assumptions imposed to produce a task result.
struct Provenance {
    std::string source_type;
    std::optional<std::string> copula;
    std::optional<std::string> tail_model;
    std::vector<std::string> approximations;
    std::optional<std::size_t> paths;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> notes;
};

// ---- results -----------------------------------------------------------------------------

struct IntervalResult {
    IntervalSet intervals;
    Provenance provenance;
};

enum class CenterScale { median_mad, mean_sd };
CenterScale parse_center_scale(std::string_view name);

struct BandResult {
    PathwiseBand band;
    /// Per-step miscoverage used by Sidak/Bonferroni; absent otherwise.
    std::optional<double> per_step_alpha;
    Provenance provenance;
};

struct EventResult {
    double probability = 0.0;
    double standard_error = 0.0;
    Provenance provenance;
};

struct VarResult {
    double value_at_risk = 0.0;
    double alpha = 0.0;
    Provenance provenance;
};

struct SurvivalCurve {
    std::vector<double> survival;  // S(1..h)
    double censored_mass = 0.0;    // S(h)
};

struct SurvivalResult {
    SurvivalCurve curve;
    /// P(tau = k), k = 1..h; with censored_mass these sum to one. Empty for the
    /// independence approximation.
    std::vector<double> hitting_mass;
    /// Monte Carlo standard error of each S(k); empty when not a sample estimate.
    std::vector<double> standard_error;
    bool independence_approximation = false;
    Provenance provenance;
};

struct AggregateResult {
    double mean = 0.0;
    std::optional<double> standard_error;
    std::optional<EmpiricalDistribution> distribution;
    /// Closed form N(sum mu, sum sigma^2) for Gaussian marginals under independence.
    std::optional<Gaussian> closed_form;
    Provenance provenance;
};

struct ScenarioRecord {
    double peak = 0.0;
    std::size_t exceedances = 0;
    double cumulative = 0.0;
};

struct ScenarioFunctionals {
    std::vector<ScenarioRecord> records;
    EmpiricalDistribution peak;
    EmpiricalDistribution exceedance;
    EmpiricalDistribution cumulative;
    Provenance provenance;
};

struct RankedScenario {
    std::size_t index = 0;
    double weight = 0.0;
    double loss = 0.0;
    double score = 0.0;  // weight * loss
};

struct ScenarioCluster {
    std::size_t medoid = 0;
    std::vector<std::size_t> members;
    double weight = 0.0;
    double mean_loss = 0.0;
    double loss_q95 = 0.0;
};

/// Step function P(L > x): probability holds on [x_i, x_{i+1}).
struct ExceedanceCurve {
    std::vector<double> x;
    std::vector<double> probability;
    double at(double loss) const;
};

struct ScenarioRanking {
    std::vector<RankedScenario> ranked;    // per_path mode
    std::vector<ScenarioCluster> clusters; // clustered mode, by descending mean loss
    ExceedanceCurve exceedance;
    Provenance provenance;
};

struct ClusterOptions {
    std::size_t k = 1;
    std::uint64_t seed = 0;
    double threshold = 0.0;  // exceedance threshold for the feature vector
    std::size_t max_iterations = 100;
};

// ---- trajectory-native estimators --------------------------------------------------------

IntervalSet pointwise_intervals(const TrajectoryEnsemble& ens, double alpha);
IntervalSet pointwise_intervals(const ParametricForecast& f, double alpha);
/// Interpolates inside the grid; levels outside the hull raise OutOfSupport.
IntervalSet pointwise_intervals(const QuantileForecast& f, double alpha);

PathwiseBand pathwise_band_from_trajectory(const TrajectoryEnsemble& ens, double alpha, CenterScale cs);

enum class Correction { sidak, bonferroni };
Correction parse_correction(std::string_view name);
double adjusted_alpha(double alpha, std::size_t h, Correction c);
BandResult band_sidak(const ParametricForecast& f, double alpha, Correction c);
BandResult band_sidak(const QuantileForecast& f, double alpha, Correction c);

EventResult event_probability(const TrajectoryEnsemble& ens, const EventSpec& e);
EventResult event_probability_marginal(const ParametricForecast& f, const EventSpec& e, const CopulaSpec& copula,
                                       std::size_t paths, std::uint64_t seed, bool strict_tails = false);
EventResult event_probability_marginal(const QuantileForecast& f, const EventSpec& e, const CopulaSpec& copula,
                                       std::size_t paths, std::uint64_t seed, const LiftOptions& options = {});

/// Losses L = -sum_k y_k; VaR is the inf-based (1 - alpha) quantile.
VarResult value_at_risk(const TrajectoryEnsemble& ens, double alpha);
/// P(L > level) for the same loss map.
double loss_tail_probability(const TrajectoryEnsemble& ens, double level);

/// p_j = P(Y_j >= C) (or <= C); S(k) = prod_{j<=k} (1 - p_j). Ignores path history.
SurvivalResult survival_from_marginals(const ParametricForecast& f, double threshold, Comparator c);
SurvivalResult survival_from_marginals(const QuantileForecast& f, double threshold, Comparator c,
                                       const TailPolicy& tails = {});
SurvivalResult survival_from_trajectories(const TrajectoryEnsemble& ens, double threshold, Comparator c);
/// Survival from per-step crossing probabilities under independence.
SurvivalCurve survival_product(std::span<const double> crossing_probabilities);
/// h_k = (S(k-1) - S(k)) / S(k-1), S(0) = 1, and 0 where S(k-1) = 0.
std::vector<double> hazard_from_survival(const SurvivalCurve& s);
/// Inverse of hazard_from_survival: S(k) = prod_{j<=k} (1 - h_j).
SurvivalCurve survival_from_hazard(std::span<const double> hazard);

enum class AggregateOutput { mean, distribution };
AggregateOutput parse_aggregate_output(std::string_view name);

AggregateResult window_aggregate(const TrajectoryEnsemble& ens, std::span<const std::size_t> window,
                                 AggregateOutput output);
/// Point input: mean only, tagged "no uncertainty".
AggregateResult window_aggregate(const PointForecast& f, std::span<const std::size_t> window, AggregateOutput output);

ScenarioFunctionals scenario_functionals(const TrajectoryEnsemble& ens, double threshold);
ScenarioRanking scenario_rank_per_path(const TrajectoryEnsemble& ens, std::span<const double> losses);
ScenarioRanking scenario_rank_clustered(const TrajectoryEnsemble& ens, std::span<const double> losses,
                                        const ClusterOptions& options);
ExceedanceCurve exceedance_curve(std::span<const double> losses, std::span<const double> weights = {});

// ---- task / forecast compatibility ------------------------------------------------------------------------

enum class Task { interval, band, event, crossing, aggregate, scenario, var };
Task parse_task(std::string_view name);
std::string_view task_name(Task t);

enum class Support { native, with_assumptions, unsupported };
Support task_support(Task task, ForecastKind kind);
std::string_view support_name(Support s);

/// Inputs a caller may supply to make a marginal or point forecast usable for a task.
struct Assumptions {
    std::optional<CopulaSpec> copula;
    std::optional<CalibrationSet> calibration;
    TailPolicy tails;
    bool strict_tails = false;
    std::size_t paths = 10000;
    std::optional<std::uint64_t> seed;
};

/// Throws Unsupported for red cells of the compatibility matrix.
void require_supported(Task task, ForecastKind kind);

IntervalResult run_intervals(const ForecastDocument& doc, double alpha, const Assumptions& a);

struct BandOptions {
    CenterScale center_scale = CenterScale::median_mad;
    /// For marginal inputs: adjust per-step levels unless a copula is supplied,
    /// in which case paths are simulated and the trajectory band is used.
    Correction correction = Correction::sidak;
};
BandResult run_band(const ForecastDocument& doc, double alpha, const BandOptions& options, const Assumptions& a);
EventResult run_event(const ForecastDocument& doc, const EventSpec& e, const Assumptions& a);
VarResult run_var(const ForecastDocument& doc, double alpha, const Assumptions& a);
SurvivalResult run_crossing(const ForecastDocument& doc, double threshold, Comparator c, const Assumptions& a);
AggregateResult run_aggregate(const ForecastDocument& doc, std::span<const std::size_t> window, AggregateOutput output,
                              const Assumptions& a);
ScenarioFunctionals run_scenario(const ForecastDocument& doc, double threshold, const Assumptions& a);

/// Marginal forecast -> paths with the supplied copula; errors name the missing assumption.
TrajectoryResult lift_to_paths(const ForecastDocument& doc, const Assumptions& a, Provenance& provenance,
                               std::string_view purpose);

}  // namespace fforms
