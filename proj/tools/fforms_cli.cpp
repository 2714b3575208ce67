// fforms: forecast-form conversion, task and evaluation command line.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fforms/convert.hpp"
#include "fforms/copula.hpp"
#include "fforms/core.hpp"
#include "fforms/errors.hpp"
#include "fforms/experiments.hpp"
#include "fforms/io.hpp"
#include "fforms/metrics.hpp"
#include "fforms/oracle.hpp"
#include "fforms/special.hpp"
#include "fforms/synth.hpp"
#include "fforms/tasks.hpp"

namespace fs = std::filesystem;
using namespace fforms;
using io::Json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitUnsupported = 3;
constexpr int kExitMissing = 4;

// ---- shared option blocks ----------------------------------------------------------------

struct CopulaOptions {
    std::string name;  // name or path to a copula JSON file
    std::optional<double> rho;
    std::optional<double> nu;
    std::string reference;  // ECC reference ensemble file
    std::string ecc_variant = "r";

    void add(CLI::App* app) {
        app->add_option("--copula", name,
                        "independence|comonotonic|countermonotonic|gaussian_ar1|gaussian_full|student_t|ecc, or a "
                        "copula JSON file");
        app->add_option("--rho", rho, "AR(1) correlation for gaussian_ar1 (and the R of gaussian_full/student_t)");
        app->add_option("--nu", nu, "degrees of freedom for the student_t copula");
        app->add_option("--reference", reference, "reference trajectory file for ecc");
        app->add_option("--ecc-variant", ecc_variant, "ecc variant q|r")->check(CLI::IsMember({"q", "r"}));
    }

    std::optional<CopulaSpec> build(std::size_t h) const {
        if (name.empty()) return std::nullopt;
        CopulaSpec spec;
        if (name.size() > 5 && name.substr(name.size() - 5) == ".json") {
            spec = io::copula_from_json(io::read_json(name));
        } else if (name == "independence") {
            spec = copula::Independence{};
        } else if (name == "comonotonic") {
            spec = copula::Comonotonic{};
        } else if (name == "countermonotonic") {
            spec = copula::Countermonotonic{};
        } else if (name == "gaussian_ar1") {
            if (!rho) throw MissingAssumption("copula gaussian_ar1 needs --rho");
            spec = copula::GaussianAr1{*rho};
        } else if (name == "gaussian_full" || name == "gaussian") {
            if (!rho) throw MissingAssumption("copula gaussian_full needs --rho or a copula JSON file with a correlation");
            spec = copula::GaussianFull{ar1_correlation(*rho, h)};
        } else if (name == "student_t") {
            if (!rho || !nu) throw MissingAssumption("copula student_t needs --rho and --nu (or a copula JSON file)");
            spec = copula::StudentT{ar1_correlation(*rho, h), *nu};
        } else if (name == "ecc") {
            if (reference.empty()) throw MissingAssumption("copula ecc needs --reference <trajectory file>");
            auto ref = io::load_forecast(reference);
            if (!std::holds_alternative<TrajectoryEnsemble>(ref)) throw InvalidInput("ecc reference must be a trajectory");
            spec = copula::Ecc{std::get<TrajectoryEnsemble>(std::move(ref)),
                               ecc_variant == "q" ? copula::EccVariant::q : copula::EccVariant::r};
        } else {
            throw InvalidInput("unknown copula '" + name + "'");
        }
        validate_copula(spec, h);
        return spec;
    }
};

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::size_t paths = 10000;
    bool strict_tails = false;
    std::string tails = "none";
    std::string cal;
    std::string out;

    void add(CLI::App* app, bool with_cal = true) {
        app->add_option("--seed", seed, "random seed (required by stochastic operations)");
        app->add_option("--paths", paths, "number of simulated paths")->check(CLI::PositiveNumber);
        app->add_flag("--strict-tails", strict_tails, "refuse draws beyond the quantile grid instead of clipping");
        app->add_option("--tails", tails, "tail model for quantile grids: none|gpd")->check(CLI::IsMember({"none", "gpd"}));
        if (with_cal) app->add_option("--cal", cal, "calibration file (past forecasts with realizations)");
        app->add_option("--out", out, "output file (default: stdout)");
    }

    TailPolicy tail_policy() const {
        TailPolicy t;
        t.kind = tails == "gpd" ? TailPolicy::Kind::gpd : TailPolicy::Kind::none;
        return t;
    }

    std::uint64_t require_seed(std::string_view what) const {
        if (!seed) throw InvalidInput(std::string(what) + " is stochastic: pass --seed");
        return *seed;
    }

    Assumptions assumptions(const CopulaOptions& c, std::size_t h) const {
        Assumptions a;
        a.copula = c.build(h);
        if (!cal.empty()) a.calibration = io::load_calibration(cal);
        a.tails = tail_policy();
        a.strict_tails = strict_tails;
        a.paths = paths;
        a.seed = seed;
        return a;
    }
};

std::string render(const io::Json& j, const std::string& format) {
    return format == "csv" ? io::flatten_csv(j) : io::dump(j);
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty()) {
        std::cout << text;
    } else {
        io::write_text(out, text);
    }
}

void notice(const std::string& line) { std::cerr << "notice: " << line << "\n"; }

void announce(const Provenance& p) {
    if (p.copula) notice("dependence assumed: copula " + *p.copula);
    if (p.tail_model) notice("tail model: " + *p.tail_model);
    for (const auto& a : p.approximations) notice(a);
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InvalidInput("bad number '" + item + "' in list '" + text + "'");
        }
    }
    if (out.empty()) throw InvalidInput("empty list");
    return out;
}

/// "2-5" or "1,3,4", 1-based; empty means the whole horizon.
std::vector<std::size_t> parse_window(const std::string& text, std::size_t h) {
    if (text.empty()) return contiguous_window(0, h - 1);
    std::vector<std::size_t> out;
    auto step = [&](const std::string& s) {
        try {
            const long v = std::stol(s);
            if (v < 1 || static_cast<std::size_t>(v) > h) throw InvalidInput("window step " + s + " outside 1.." + std::to_string(h));
            return static_cast<std::size_t>(v - 1);
        } catch (const std::logic_error&) {
            throw InvalidInput("bad window step '" + s + "'");
        }
    };
    if (const auto dash = text.find('-'); dash != std::string::npos) {
        const auto a = step(text.substr(0, dash));
        const auto b = step(text.substr(dash + 1));
        if (b < a) throw InvalidInput("window range is reversed");
        return contiguous_window(a, b);
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(step(item));
    return out;
}

std::string fmt(double x, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

// ---- convert ----------------------------------------------------------------------------------

struct ConvertArgs {
    std::string in;
    std::string to;
    std::string levels = "0.05,0.1,0.25,0.5,0.75,0.9,0.95";
    std::string family = "gaussian";
    std::string statistic = "mean";
    std::string method = "regression";
    std::string moment_levels;
    std::string weights = "asymptotic";
    std::string bootstrap = "rows";
    double alpha = 0.1;
    RunOptions run;
    CopulaOptions copula;
};

ParametricForecast point_to_parametric(const PointForecast& f, const CalibrationSet& cal, Family family) {
    require_valid(cal);
    ParametricForecast out{f.meta, family, {}};
    for (std::size_t k = 0; k < f.values.size(); ++k) {
        std::vector<double> shifted;
        for (const auto& rec : cal.records) {
            const auto* p = std::get_if<PointForecast>(&rec.forecast);
            if (!p) throw InvalidInput("calibration records for a point forecast must hold point forecasts");
            if (p->values.size() != f.values.size()) throw InvalidInput("calibration horizon differs from the forecast");
            shifted.push_back(f.values[k] + (rec.realization[k] - p->values[k]));
        }
        out.params.push_back(fit_mle(shifted, family));
    }
    return out;
}

int cmd_convert(const ConvertArgs& a) {
    const auto doc = io::load_forecast(a.in);
    const ForecastKind from = kind_of(doc);
    const ForecastKind to = parse_kind(a.to);
    const std::size_t h = meta_of(doc).horizon;
    ForecastDocument result;
    auto need_cal = [&]() {
        if (a.run.cal.empty()) {
            throw MissingAssumption("converting a point forecast to a probabilistic form requires external calibration "
                                    "data (--cal)");
        }
        return io::load_calibration(a.run.cal);
    };
    auto need_copula = [&]() {
        auto c = a.copula.build(h);
        if (!c) {
            throw MissingAssumption(std::string(kind_name(from)) +
                                    " -> trajectory requires dependence assumptions (supply --copula)");
        }
        return *c;
    };

    if (from == to) {
        result = doc;
    } else if (from == ForecastKind::trajectory) {
        const auto& ens = std::get<TrajectoryEnsemble>(doc);
        if (to == ForecastKind::quantile) result = traj_to_quantile(ens, parse_list(a.levels));
        if (to == ForecastKind::parametric) result = traj_to_parametric(ens, parse_family(a.family));
        if (to == ForecastKind::point) result = traj_to_point(ens, parse_statistic(a.statistic));
        notice("marginalization discards temporal dependence");
    } else if (from == ForecastKind::parametric) {
        const auto& f = std::get<ParametricForecast>(doc);
        if (to == ForecastKind::quantile) result = parametric_to_quantile(f, parse_list(a.levels));
        if (to == ForecastKind::point) result = parametric_to_point(f, parse_statistic(a.statistic));
        if (to == ForecastKind::trajectory) {
            const auto c = need_copula();
            const auto seed = a.run.require_seed("parametric -> trajectory");
            const auto r = marginals_to_trajectory(f, c, a.run.paths, seed, a.run.strict_tails);
            notice("dependence assumed: copula " + describe(c));
            if (r.clipped_draws) notice(std::to_string(r.clipped_draws) + " draws clipped into the interpolant support");
            result = r.ensemble;
        }
    } else if (from == ForecastKind::quantile) {
        const auto& f = std::get<QuantileForecast>(doc);
        if (to == ForecastKind::parametric) {
            if (a.method == "moment") {
                const auto lv = a.moment_levels.empty() ? std::vector<double>{f.levels.front(), f.levels.back()}
                                                        : parse_list(a.moment_levels);
                if (lv.size() != 2) throw InvalidInput("--moment-levels takes exactly two levels");
                result = quantile_to_parametric_moment_match(f, {lv[0], lv[1]});
                notice("distributional family assumed: gaussian (two-level moment match)");
            } else if (a.method == "regression") {
                const auto fam = parse_family(a.family);
                result = quantile_to_parametric_regression(
                             f, fam, a.weights == "equal" ? WeightMode::equal : WeightMode::asymptotic)
                             .forecast;
                notice("distributional family assumed: " + std::string(family_name(fam)) + " (quantile regression)");
            } else {
                result = quantile_to_interpolated_cdf(f, a.run.tail_policy());
                notice(a.run.tails == "gpd" ? "monotone interpolation with GPD tails"
                                            : "monotone interpolation; support limited to the grid");
            }
        }
        if (to == ForecastKind::point) {
            const auto r = quantile_to_point(f, parse_statistic(a.statistic), a.run.tail_policy());
            for (const auto& w : r.warnings) notice(w);
            result = r.forecast;
        }
        if (to == ForecastKind::trajectory) {
            const auto c = need_copula();
            const auto seed = a.run.require_seed("quantile -> trajectory");
            const auto r = marginals_to_trajectory(f, c, a.run.paths, seed, LiftOptions{a.run.tail_policy(), a.run.strict_tails});
            notice("dependence assumed: copula " + describe(c));
            notice(a.run.tails == "gpd" ? "marginals reconstructed by interpolation with GPD tails"
                                        : "marginals reconstructed by interpolation within the grid");
            if (r.clipped_draws) notice(std::to_string(r.clipped_draws) + " draws clipped into the quantile grid");
            result = r.ensemble;
        }
    } else {
        const auto& f = std::get<PointForecast>(doc);
        const auto cal = need_cal();
        if (to == ForecastKind::quantile) {
            const auto iv = point_to_intervals_conformal(f, cal, {a.alpha, ConformalConfig::Mode::per_step, {}});
            result = intervals_to_quantile(f.meta, iv, a.alpha);
            notice("split conformal intervals from " + std::to_string(cal.records.size()) +
                   " calibration records (assumes exchangeable errors)");
        }
        if (to == ForecastKind::trajectory) {
            const auto seed = a.run.require_seed("point -> trajectory");
            result = point_to_trajectory_bootstrap(f, cal, a.run.paths, parse_bootstrap_mode(a.bootstrap), seed);
            notice("residual bootstrap (" + a.bootstrap + ") from " + std::to_string(cal.records.size()) +
                   " calibration records");
        }
        if (to == ForecastKind::parametric) {
            result = point_to_parametric(f, cal, parse_family(a.family));
            notice("family " + a.family + " fitted to point + calibration residuals per lead");
        }
    }
    emit(a.run.out, io::dump(io::to_json(result)));
    return kExitOk;
}

// ---- task ---------------------------------------------------------------------------------------

struct TaskArgs {
    std::string task;
    std::string format = "json";
    std::string in;
    double alpha = 0.1;
    std::optional<double> threshold;
    std::string comparator = "ge";
    std::string functional = "sum";
    std::string window;
    std::string output = "mean";
    std::string center_scale = "median_mad";
    std::string correction = "sidak";
    std::string rank = "none";
    std::size_t k = 3;
    RunOptions run;
    CopulaOptions copula;
};

int cmd_task(const TaskArgs& t) {
    const Task task = parse_task(t.task);
    const auto doc = io::load_forecast(t.in);
    const std::size_t h = meta_of(doc).horizon;
    require_supported(task, kind_of(doc));
    const auto a = t.run.assumptions(t.copula, h);
    auto need_threshold = [&]() {
        if (!t.threshold) throw InvalidInput("task '" + t.task + "' needs --threshold");
        return *t.threshold;
    };
    Json out;
    switch (task) {
        case Task::interval: {
            const auto r = run_intervals(doc, t.alpha, a);
            announce(r.provenance);
            out = io::to_json(r);
            break;
        }
        case Task::band: {
            const auto r = run_band(doc, t.alpha, {parse_center_scale(t.center_scale), parse_correction(t.correction)}, a);
            announce(r.provenance);
            out = io::to_json(r);
            break;
        }
        case Task::event: {
            EventSpec e{parse_window(t.window, h), parse_functional(t.functional), parse_comparator(t.comparator),
                        need_threshold()};
            const auto r = run_event(doc, e, a);
            announce(r.provenance);
            out = io::to_json(r);
            break;
        }
        case Task::var: {
            const auto r = run_var(doc, t.alpha, a);
            announce(r.provenance);
            out = io::to_json(r);
            break;
        }
        case Task::crossing: {
            const auto r = run_crossing(doc, need_threshold(), parse_comparator(t.comparator), a);
            announce(r.provenance);
            out = io::to_json(r);
            break;
        }
        case Task::aggregate: {
            const auto w = parse_window(t.window, h);
            const auto r = run_aggregate(doc, w, parse_aggregate_output(t.output), a);
            announce(r.provenance);
            out = io::to_json(r);
            break;
        }
        case Task::scenario: {
            const double c = need_threshold();
            const auto r = run_scenario(doc, c, a);
            announce(r.provenance);
            out = io::to_json(r);
            if (t.rank != "none") {
                // Ranking needs the paths themselves; re-use the ensemble the functionals came from.
                TrajectoryEnsemble ens;
                if (const auto* e = std::get_if<TrajectoryEnsemble>(&doc)) {
                    ens = *e;
                } else {
                    Provenance p;
                    ens = lift_to_paths(doc, a, p, "scenario ranking").ensemble;
                }
                std::vector<double> losses(ens.size(), 0.0);
                for (std::size_t m = 0; m < ens.size(); ++m) {
                    for (double v : ens.paths.row(m)) losses[m] += std::max(v - c, 0.0);
                }
                ScenarioRanking ranking;
                if (t.rank == "per_path") {
                    ranking = scenario_rank_per_path(ens, losses);
                } else if (t.rank == "clustered") {
                    ranking = scenario_rank_clustered(ens, losses, {t.k, t.run.require_seed("clustered ranking"), c, 100});
                } else {
                    throw InvalidInput("--rank must be none, per_path or clustered");
                }
                ranking.provenance.notes.push_back("loss = sum over steps of max(y - threshold, 0)");
                out["ranking"] = io::to_json(ranking);
            }
            break;
        }
    }
    emit(t.run.out, render(out, t.format));
    return kExitOk;
}

// ---- eval ---------------------------------------------------------------------------------------

struct EvalArgs {
    std::string format = "json";
    std::vector<std::string> forecasts;
    std::string actuals;
    std::string metrics = "all";
    std::string training;
    std::optional<double> threshold;
    double alpha = 0.1;
    std::size_t bins = 10;
    std::string variogram_weights = "uniform";
    std::string pit_csv;
    std::string reliability_csv;
    RunOptions run;
    CopulaOptions copula;
};

/// Documents of a forecast file: a single document or an array of them.
std::vector<std::pair<std::optional<std::string>, ForecastDocument>> load_batch(const std::string& path) {
    const auto j = io::read_json(path);
    std::vector<std::pair<std::optional<std::string>, ForecastDocument>> out;
    auto one = [&](const Json& d) {
        std::optional<std::string> id;
        if (d.contains("window_id")) id = d["window_id"].is_string() ? d["window_id"].get<std::string>() : d["window_id"].dump();
        auto doc = io::forecast_from_json(d);
        require_valid(doc);
        out.push_back({id, std::move(doc)});
    };
    if (j.is_array()) {
        for (const auto& d : j) one(d);
    } else {
        one(j);
    }
    return out;
}

int cmd_eval(const EvalArgs& a) {
    std::vector<std::pair<std::optional<std::string>, ForecastDocument>> docs;
    for (const auto& f : a.forecasts) {
        auto b = load_batch(f);
        docs.insert(docs.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
    }
    if (docs.empty()) throw InvalidInput("no forecasts to evaluate");
    const auto actuals = io::actuals_from_csv(io::read_text(a.actuals));
    std::map<std::string, const io::ActualsWindow*> by_id;
    for (const auto& w : actuals) by_id[w.id] = &w;

    CalibrationSet batch;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const io::ActualsWindow* w = nullptr;
        if (docs[i].first) {
            auto it = by_id.find(*docs[i].first);
            if (it == by_id.end()) throw InvalidInput("no actuals for window '" + *docs[i].first + "'");
            w = it->second;
        } else {
            if (i >= actuals.size()) throw InvalidInput("more forecasts than actuals windows");
            w = &actuals[i];
        }
        ForecastDocument doc = docs[i].second;
        const std::size_t h = meta_of(doc).horizon;
        if (w->values.size() != h) {
            throw InvalidInput("window '" + w->id + "' has " + std::to_string(w->values.size()) +
                               " actuals; the forecast horizon is " + std::to_string(h));
        }
        batch.records.push_back({std::move(doc), w->values});
        ids.push_back(w->id);
    }
    const ForecastKind kind = kind_of(batch.records.front().forecast);
    for (const auto& r : batch.records) {
        if (kind_of(r.forecast) != kind) throw InvalidInput("all forecasts in one evaluation must share a type");
    }
    const std::size_t h = meta_of(batch.records.front().forecast).horizon;

    // Marginal inputs may be lifted to paths when a copula is given, enabling path scores.
    ForecastKind scored = kind;
    std::optional<std::string> lifted_with;
    const auto copula = a.copula.build(h);
    if (copula && (kind == ForecastKind::quantile || kind == ForecastKind::parametric)) {
        Assumptions as;
        as.copula = copula;
        as.tails = a.run.tail_policy();
        as.strict_tails = a.run.strict_tails;
        as.paths = a.run.paths;
        as.seed = a.run.require_seed("lifting forecasts for evaluation");
        for (std::size_t i = 0; i < batch.records.size(); ++i) {
            Provenance p;
            as.seed = derive_seed(*a.run.seed, i);
            batch.records[i].forecast = lift_to_paths(batch.records[i].forecast, as, p, "path scoring").ensemble;
        }
        scored = ForecastKind::trajectory;
        lifted_with = describe(*copula);
        notice("forecasts lifted to " + std::to_string(a.run.paths) + " paths with copula " + *lifted_with);
    }

    std::vector<Metric> metrics;
    if (a.metrics == "all") {
        for (Metric m : {Metric::mae, Metric::mse, Metric::mase, Metric::wis, Metric::crps, Metric::log_score,
                         Metric::energy, Metric::variogram, Metric::brier, Metric::ibs, Metric::pit, Metric::coverage}) {
            try {
                require_metric_support(m, scored);
            } catch (const Unsupported&) {
                continue;
            }
            if (m == Metric::mase && a.training.empty()) continue;
            if ((m == Metric::brier || m == Metric::ibs) && !a.threshold) continue;
            if (m == Metric::wis && scored != ForecastKind::quantile) continue;
            if (m == Metric::variogram && h < 2) continue;
            metrics.push_back(m);
        }
    } else {
        std::stringstream ss(a.metrics);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const Metric m = parse_metric(item);
            require_metric_support(m, scored);
            if (m == Metric::wis && scored != ForecastKind::quantile) {
                throw Unsupported("metric 'wis' is defined on quantile forecasts; convert to a quantile grid first");
            }
            metrics.push_back(m);
        }
    }

    Json report;
    report["forecast_type"] = kind_name(kind);
    if (lifted_with) report["lifted_with_copula"] = *lifted_with;
    report["windows"] = batch.records.size();
    report["horizon"] = h;
    Json results = Json::object();
    const std::size_t n = batch.records.size();
    const auto nd = static_cast<double>(n);

    auto event_predictions = [&](std::vector<double>& pred, std::vector<int>& outcome) {
        EventSpec e{contiguous_window(0, h - 1), Functional::first_crossing, Comparator::ge, *a.threshold};
        for (const auto& r : batch.records) {
            pred.push_back(event_probability(std::get<TrajectoryEnsemble>(r.forecast), e).probability);
            outcome.push_back(event_holds(r.realization, e) ? 1 : 0);
        }
    };

    for (Metric m : metrics) {
        const std::string name(metric_name(m));
        switch (m) {
            case Metric::mae:
            case Metric::mse:
            case Metric::mase: {
                std::optional<HistorySeries> train;
                if (!a.training.empty()) train = io::history_from_csv(io::read_text(a.training));
                if (m == Metric::mase && !train) throw MissingAssumption("MASE needs a training series (--training)");
                const auto e = point_errors(batch, train ? &*train : nullptr);
                if (m == Metric::mae) results[name] = e.mae;
                if (m == Metric::mse) results[name] = e.mse;
                if (m == Metric::mase) results[name] = *e.mase;
                break;
            }
            case Metric::wis: {
                double s = 0.0;
                for (const auto& r : batch.records) s += wis(std::get<QuantileForecast>(r.forecast), r.realization);
                results[name] = s / nd;
                break;
            }
            case Metric::crps: {
                std::vector<double> per_step(h, 0.0);
                bool approximate = false;
                for (const auto& r : batch.records) {
                    const auto c = crps(r.forecast, r.realization);
                    approximate = approximate || c.approximate;
                    for (std::size_t k = 0; k < h; ++k) per_step[k] += c.per_step[k] / nd;
                }
                const double mean = std::accumulate(per_step.begin(), per_step.end(), 0.0) / static_cast<double>(h);
                results[name] = Json{{"mean", mean}, {"per_step", per_step}, {"approximate", approximate}};
                if (approximate) notice("CRPS on a quantile grid is approximate (finite levels)");
                break;
            }
            case Metric::log_score: {
                double s = 0.0;
                for (const auto& r : batch.records) s += log_score(std::get<ParametricForecast>(r.forecast), r.realization);
                results[name] = s / nd;
                break;
            }
            case Metric::energy:
            case Metric::variogram: {
                std::vector<double> per;
                for (const auto& r : batch.records) {
                    const auto& ens = std::get<TrajectoryEnsemble>(r.forecast);
                    per.push_back(m == Metric::energy
                                      ? energy_score(ens, r.realization)
                                      : variogram_score(ens, r.realization, parse_variogram_weights(a.variogram_weights)));
                }
                results[name] = Json{{"mean", std::accumulate(per.begin(), per.end(), 0.0) / nd}, {"per_window", per}};
                break;
            }
            case Metric::brier: {
                if (!a.threshold) throw MissingAssumption("brier needs an event threshold (--threshold)");
                std::vector<double> pred;
                std::vector<int> outcome;
                event_predictions(pred, outcome);
                const auto table = reliability(pred, outcome, a.bins);
                results[name] = Json{{"event", "some step >= " + io::format_number(*a.threshold)},
                                     {"value", brier(pred, outcome)},
                                     {"reliability", io::to_json(table)}};
                if (!a.reliability_csv.empty()) {
                    std::string csv = "lower,upper,count,mean_prediction,frequency\n";
                    for (const auto& b : table.bins) {
                        csv += io::format_number(b.lower) + "," + io::format_number(b.upper) + "," +
                               std::to_string(b.count) + "," +
                               (b.mean_prediction ? io::format_number(*b.mean_prediction) : "") + "," +
                               (b.frequency ? io::format_number(*b.frequency) : "") + "\n";
                    }
                    io::write_text(a.reliability_csv, csv);
                }
                break;
            }
            case Metric::ibs: {
                if (!a.threshold) throw MissingAssumption("ibs needs a crossing threshold (--threshold)");
                Matrix surv(n, h);
                std::vector<std::optional<std::size_t>> tau(n);
                for (std::size_t i = 0; i < n; ++i) {
                    const auto& r = batch.records[i];
                    const auto s = survival_from_trajectories(std::get<TrajectoryEnsemble>(r.forecast), *a.threshold,
                                                              Comparator::ge);
                    for (std::size_t k = 0; k < h; ++k) surv(i, k) = s.curve.survival[k];
                    for (std::size_t k = 0; k < h; ++k) {
                        if (r.realization[k] >= *a.threshold) {
                            tau[i] = k + 1;
                            break;
                        }
                    }
                }
                results[name] = integrated_brier(surv, tau);
                break;
            }
            case Metric::pit: {
                const auto seed = a.run.require_seed("randomized PIT");
                Json steps = Json::array();
                std::string csv = "window_id,t,pit\n";
                std::vector<std::vector<double>> values;
                for (std::size_t k = 0; k < h; ++k) {
                    const auto p = pit_values(batch, k, derive_seed(seed, k));
                    steps.push_back(Json{{"step", k + 1}, {"ks_distance", p.ks_distance}, {"clipped", p.clipped}});
                    values.push_back(p.values);
                }
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t k = 0; k < h; ++k) {
                        csv += ids[i] + "," + std::to_string(k + 1) + "," + io::format_number(values[k][i]) + "\n";
                    }
                }
                if (!a.pit_csv.empty()) io::write_text(a.pit_csv, csv);
                results[name] = Json{{"per_step", steps}};
                break;
            }
            case Metric::coverage: {
                std::vector<IntervalSet> iv;
                std::vector<std::vector<double>> ys;
                for (const auto& r : batch.records) {
                    iv.push_back(std::visit(
                        [&](const auto& f) -> IntervalSet {
                            using T = std::decay_t<decltype(f)>;
                            if constexpr (std::is_same_v<T, PointForecast>) {
                                throw Unsupported("coverage needs intervals; a point forecast has none");
                            } else {
                                return pointwise_intervals(f, a.alpha);
                            }
                        },
                        r.forecast));
                    ys.push_back(r.realization);
                }
                Json c{{"nominal", 1.0 - a.alpha}, {"pointwise", coverage(iv, ys, CoverageMode::pointwise)}};
                if (scored == ForecastKind::trajectory) {
                    std::vector<IntervalSet> bands;
                    for (const auto& r : batch.records) {
                        const auto b = pathwise_band_from_trajectory(std::get<TrajectoryEnsemble>(r.forecast), a.alpha,
                                                                     CenterScale::median_mad);
                        bands.push_back({b.lower, b.upper});
                    }
                    c["simultaneous"] = coverage(bands, ys, CoverageMode::simultaneous);
                }
                results[name] = c;
                break;
            }
        }
    }
    report["metrics"] = results;
    emit(a.run.out, render(report, a.format));
    return kExitOk;
}

// ---- synth --------------------------------------------------------------------------------------

struct SynthArgs {
    double rho = 0.8;
    std::size_t n = 1000;
    std::size_t h = 8;
    std::size_t windows = 100;
    std::size_t paths = 0;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

int cmd_synth(const SynthArgs& a) {
    if (!a.seed) throw InvalidInput("synth is stochastic: pass --seed");
    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    io::write_text(dir / "history.csv", io::history_to_csv(simulate_ar1(a.rho, a.n, *a.seed)));
    const auto wins = simulate_ar1_windows(a.rho, a.h, a.windows, derive_seed(*a.seed, 0));
    std::vector<io::ActualsWindow> actuals;
    Json truth = Json::array();
    CalibrationSet cal;
    Json trajectories = Json::array();
    for (std::size_t i = 0; i < wins.size(); ++i) {
        const auto id = "w" + std::to_string(i + 1);
        actuals.push_back({id, wins[i].realization});
        truth.push_back(Json{{"window_id", id},
                             {"origin_value", wins[i].origin_value},
                             {"mean", wins[i].truth.mean},
                             {"covariance", wins[i].truth.covariance.to_rows()}});
        HorizonMeta meta{0, a.h, {}};
        cal.records.push_back({PointForecast{meta, wins[i].truth.mean}, wins[i].realization});
        if (a.paths > 0) {
            auto ens = simulate_ar1_paths(a.rho, wins[i].origin_value, a.h, a.paths, derive_seed(*a.seed, i + 1));
            Json d = io::to_json(ForecastDocument{ens});
            d["window_id"] = id;
            trajectories.push_back(d);
        }
    }
    io::write_text(dir / "actuals.csv", io::actuals_to_csv(actuals));
    io::write_text(dir / "truth.json", io::dump(Json{{"model", "ar1"}, {"rho", a.rho}, {"windows", truth}}));
    io::write_text(dir / "calibration.json", io::dump(io::to_json(cal)));
    if (a.paths > 0) io::write_text(dir / "trajectories.json", io::dump(trajectories));
    std::cerr << "wrote " << a.windows << " windows (h = " << a.h << ") and a history of " << a.n << " values to "
              << a.out_dir << "\n";
    return kExitOk;
}

// ---- demo ---------------------------------------------------------------------------------------

struct DemoArgs {
    std::string which;
    std::optional<std::uint64_t> seed;
    std::size_t paths = 0;
};

std::uint64_t demo_seed(const DemoArgs& a) {
    if (!a.seed) throw InvalidInput("demo " + a.which + " is stochastic: pass --seed");
    return *a.seed;
}

int demo_prop1(const DemoArgs& a) {
    const std::size_t M = a.paths ? a.paths : 10000;
    const std::size_t h = 5;
    const double rho = 0.7;
    const auto ens = simulate_ar1_paths(rho, 1.0, h, M, demo_seed(a));
    const auto truth = ar1_conditional(rho, 1.0, h);
    std::cout << "trajectory ensemble: AR(1) rho=0.7 from y_T=1, M=" << M << ", h=" << h << "\n\n";
    const std::vector<double> levels{0.1, 0.5, 0.9};
    const auto q = traj_to_quantile(ens, levels);
    const auto p = traj_to_parametric(ens, Family::gaussian);
    const auto pt = traj_to_point(ens, Statistic::mean);
    const double bound = 1.63 / std::sqrt(static_cast<double>(M));
    std::cout << "step  Q0.1     Q0.5     Q0.9     mu       sigma    mean     sup|F_M-F|  DKW(99%)\n";
    bool ok = true;
    for (std::size_t k = 0; k < h; ++k) {
        const double mu = truth.mean[k];
        const double sd = std::sqrt(truth.covariance(k, k));
        auto col = ens.paths.column(k);
        std::sort(col.begin(), col.end());
        double d = 0.0;
        for (std::size_t i = 0; i < M; ++i) {
            const double F = special::normal_cdf((col[i] - mu) / sd);
            d = std::max({d, static_cast<double>(i + 1) / static_cast<double>(M) - F, F - static_cast<double>(i) / static_cast<double>(M)});
        }
        ok = ok && d <= bound;
        const auto& g = std::get<Gaussian>(p.params[k]);
        std::cout << k + 1 << "     " << fmt(q.values(k, 0)) << "  " << fmt(q.values(k, 1)) << "  " << fmt(q.values(k, 2))
                  << "  " << fmt(g.mu) << "  " << fmt(g.sigma) << "  " << fmt(pt.values[k]) << "  " << fmt(d, 5)
                  << "     " << fmt(bound, 5) << "\n";
    }
    std::cout << "\nall simpler forms derived by marginalization; DKW check " << (ok ? "passed" : "FAILED") << "\n";
    return kExitOk;
}

int demo_prop2(const DemoArgs& a) {
    const std::size_t M = a.paths ? a.paths : 100000;
    const auto seed = demo_seed(a);
    ParametricForecast f{{0, 2, {}}, Family::gaussian, {Gaussian{0, 1}, Gaussian{0, 1}}};
    const EventSpec e{{0, 1}, Functional::max, Comparator::le, 0.0};
    std::cout << "Gaussian(0,1) marginals at both steps, event {max(Y1, Y2) <= 0}, M=" << M << "\n\n";
    std::cout << "copula            P(event)  exact\n";
    const std::pair<CopulaSpec, double> cases[] = {
        {copula::Independence{}, 0.25}, {copula::Comonotonic{}, 0.5}, {copula::Countermonotonic{}, 0.0}};
    for (const auto& [c, exact] : cases) {
        const auto r = event_probability_marginal(f, e, c, M, seed);
        std::string name = copula_name(c);
        name.resize(18, ' ');
        std::cout << name << fmt(r.probability) << "    " << fmt(exact, 2) << "\n";
    }
    std::cout << "\nidentical marginals, three different answers: the marginals do not determine the event\n";
    return kExitOk;
}

int demo_prop3() {
    const std::vector<double> levels{0.1, 0.25, 0.5, 0.75, 0.9};
    QuantileForecast q{{0, 1, {}}, levels, Matrix(1, levels.size())};
    for (std::size_t l = 0; l < levels.size(); ++l) q.values(0, l) = special::normal_quantile(levels[l]);
    const auto f = quantile_to_parametric_moment_match(q, {0.1, 0.9});
    const auto& g = std::get<Gaussian>(f.params[0]);
    std::cout << "exact Gaussian(0,1) quantiles at levels 0.1 and 0.9\n";
    std::cout << "recovered mu = " << io::format_number(g.mu + 0.0) << ", sigma = " << io::format_number(g.sigma) << "\n";
    std::cout << "errors: |mu| = " << std::abs(g.mu) << ", |sigma - 1| = " << std::abs(g.sigma - 1.0) << "\n\n";
    std::cout << "median-only configuration (0.5, 0.5):\n";
    try {
        quantile_to_parametric_moment_match(q, {0.5, 0.5});
        std::cout << "  unexpectedly succeeded\n";
    } catch (const InvalidInput& e) {
        std::cout << "  error: " << e.what() << "\n";
    }
    return kExitOk;
}

int demo_persistence(const DemoArgs& a) {
    const auto seed = demo_seed(a);
    const double rho = 0.9;
    const double c = 0.8416212335729143 / std::sqrt(1.0 - rho * rho);
    const std::size_t M = a.paths ? a.paths : 100000;
    const auto r = persistence_experiment(rho, 0.0, c, 10, M, 1000000, seed, derive_seed(seed, 1));
    std::cout << "AR(1) rho=0.9 from y_T=0, threshold C=" << fmt(c) << " (stationary 80th percentile)\n";
    std::cout << "M=" << M << " trajectory estimate, 10^6-path reference\n\n";
    std::cout << "k   S_indep   S_traj    S_ref\n";
    for (std::size_t k = 0; k < r.trajectory.size(); ++k) {
        std::cout << (k + 1 < 10 ? " " : "") << k + 1 << "  " << fmt(r.independence[k]) << "    " << fmt(r.trajectory[k])
                  << "    " << fmt(r.reference[k]) << "\n";
    }
    std::cout << "\nmax |indep - traj| = " << fmt(r.max_independence_gap) << "; max |traj - ref| = "
              << fmt(r.max_reference_gap) << "\n";
    std::cout << "the independence approximation ignores persistence and understates survival\n";
    return kExitOk;
}

int demo_dependence(const DemoArgs& a) {
    const auto seed = demo_seed(a);
    const std::size_t M = a.paths ? a.paths : 500;
    const auto r = dependence_experiment(0.8, 8, M, 500, seed);
    std::cout << "AR(1) rho=0.8, h=8, M=" << M << ", " << r.windows << " windows\n";
    std::cout << "true joint vs independence coupling of the same Gaussian marginals\n\n";
    std::cout << "score       true      indep     gap\n";
    std::cout << "crps        " << fmt(r.crps_true) << "    " << fmt(r.crps_indep) << "    "
              << fmt(100.0 * r.crps_relative_gap, 2) << "%\n";
    std::cout << "energy      " << fmt(r.energy_true) << "    " << fmt(r.energy_indep) << "    " << fmt(r.energy_z(), 1)
              << " SE\n";
    std::cout << "variogram   " << fmt(r.variogram_true) << "    " << fmt(r.variogram_indep) << "    "
              << fmt(r.variogram_z(), 1) << " SE\n";
    std::cout << "\nCRPS cannot tell the two apart; the path scores can\n";
    return kExitOk;
}

int cmd_demo(const DemoArgs& a) {
    if (a.which == "prop1") return demo_prop1(a);
    if (a.which == "prop2") return demo_prop2(a);
    if (a.which == "prop3") return demo_prop3();
    if (a.which == "persistence") return demo_persistence(a);
    if (a.which == "dependence") return demo_dependence(a);
    throw InvalidInput("unknown demo '" + a.which + "'");
}

// ---- validate -----------------------------------------------------------------------------------

int cmd_validate(const std::string& path, const std::string& kind) {
    std::vector<Violation> v;
    if (kind == "forecast") {
        v = validate(io::forecast_from_json(io::read_json(path)));
    } else if (kind == "calibration") {
        v = validate(io::calibration_from_json(io::read_json(path)));
    } else if (kind == "joint") {
        io::load_joint(path);
    } else if (kind == "history") {
        io::history_from_csv(io::read_text(path));
    } else {
        throw InvalidInput("unknown kind '" + kind + "'");
    }
    if (v.empty()) {
        std::cout << "valid\n";
        return kExitOk;
    }
    for (const auto& x : v) std::cout << x.field << (x.index ? "[" + std::to_string(*x.index) + "]" : "") << ": " << x.message << "\n";
    return kExitInvalid;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fforms - convert, query and score time-series forecasts of any form"};
    app.require_subcommand(1);

    ConvertArgs conv;
    auto* c = app.add_subcommand("convert", "convert a forecast document to another form");
    c->add_option("--in", conv.in, "input forecast file")->required();
    c->add_option("--to", conv.to, "target form: point|quantile|parametric|trajectory")->required();
    c->add_option("--levels", conv.levels, "comma-separated quantile levels");
    c->add_option("--family", conv.family, "gaussian|student_t|empirical|spliced_gpd");
    c->add_option("--statistic", conv.statistic, "mean|median");
    c->add_option("--method", conv.method, "quantile -> parametric: moment|regression|interpolate")
        ->check(CLI::IsMember({"moment", "regression", "interpolate"}));
    c->add_option("--moment-levels", conv.moment_levels, "two levels for the moment match");
    c->add_option("--weights", conv.weights, "regression weights: equal|asymptotic")
        ->check(CLI::IsMember({"equal", "asymptotic"}));
    c->add_option("--bootstrap", conv.bootstrap, "point -> trajectory residual resampling: rows|by_lead|pooled");
    c->add_option("--alpha", conv.alpha, "miscoverage for conformal intervals");
    conv.run.add(c);
    conv.copula.add(c);

    TaskArgs task;
    auto* t = app.add_subcommand("task", "run an operational task");
    t->add_option("task", task.task, "interval|band|event|var|crossing|aggregate|scenario")->required();
    t->add_option("--in", task.in, "input forecast file")->required();
    t->add_option("--alpha", task.alpha, "miscoverage / tail level");
    t->add_option("--threshold", task.threshold, "event or crossing threshold");
    t->add_option("--comparator", task.comparator, "ge|le");
    t->add_option("--functional", task.functional, "sum|max|min|first_crossing");
    t->add_option("--window", task.window, "1-based steps: 'a-b' or 'i,j,k' (default: whole horizon)");
    t->add_option("--output", task.output, "aggregate output: mean|distribution");
    t->add_option("--center-scale", task.center_scale, "band center/scale: median_mad|mean_sd");
    t->add_option("--correction", task.correction, "band correction for marginal inputs: sidak|bonferroni");
    t->add_option("--rank", task.rank, "scenario ranking: none|per_path|clustered");
    t->add_option("--k", task.k, "number of scenario clusters");
    t->add_option("--format", task.format, "result format: json|csv")->check(CLI::IsMember({"json", "csv"}));
    task.run.add(t);
    task.copula.add(t);

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "score forecasts against realized values");
    e->add_option("--forecast", ev.forecasts, "forecast file(s): a document or an array of documents")->required();
    e->add_option("--actuals", ev.actuals, "CSV window_id,t,value")->required();
    e->add_option("--metrics", ev.metrics, "comma-separated metrics or 'all'");
    e->add_option("--training", ev.training, "training history CSV t,value (for MASE)");
    e->add_option("--threshold", ev.threshold, "event threshold for brier / ibs (crossing at any step)");
    e->add_option("--alpha", ev.alpha, "miscoverage for coverage");
    e->add_option("--bins", ev.bins, "reliability bins");
    e->add_option("--variogram-weights", ev.variogram_weights, "uniform|inverse_lag");
    e->add_option("--pit-csv", ev.pit_csv, "write PIT values as CSV");
    e->add_option("--reliability-csv", ev.reliability_csv, "write the reliability table as CSV");
    e->add_option("--format", ev.format, "report format: json|csv")->check(CLI::IsMember({"json", "csv"}));
    ev.run.add(e, false);
    ev.copula.add(e);

    SynthArgs sy;
    auto* s = app.add_subcommand("synth", "generate AR(1) data with its exact conditional law");
    std::string model = "ar1";
    s->add_option("--model", model, "generator (only ar1)")->check(CLI::IsMember({"ar1"}));
    s->add_option("--rho", sy.rho, "autoregressive coefficient, |rho| < 1");
    s->add_option("--n", sy.n, "history length");
    s->add_option("--horizon", sy.h, "forecast horizon");
    s->add_option("--windows", sy.windows, "number of forecast windows");
    s->add_option("--paths", sy.paths, "also write true-joint trajectory forecasts with this many paths");
    s->add_option("--seed", sy.seed, "random seed");
    s->add_option("--out-dir", sy.out_dir, "output directory");

    DemoArgs demo;
    auto* d = app.add_subcommand("demo", "print a worked demonstration");
    d->add_option("which", demo.which, "prop1|prop2|prop3|persistence|dependence")->required();
    d->add_option("--seed", demo.seed, "random seed");
    d->add_option("--paths", demo.paths, "number of paths");

    std::string vpath;
    std::string vkind = "forecast";
    auto* v = app.add_subcommand("validate", "check a file against its schema and invariants");
    v->add_option("file", vpath)->required();
    v->add_option("--kind", vkind, "forecast|calibration|joint|history");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : kExitInvalid;
    }

    try {
        if (*c) return cmd_convert(conv);
        if (*t) return cmd_task(task);
        if (*e) return cmd_eval(ev);
        if (*s) return cmd_synth(sy);
        if (*d) return cmd_demo(demo);
        if (*v) return cmd_validate(vpath, vkind);
    } catch (const MissingAssumption& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitMissing;
    } catch (const Unsupported& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitUnsupported;
    } catch (const InvalidInput& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return kExitOk;
}
