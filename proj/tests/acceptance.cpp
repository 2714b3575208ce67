// Acceptance run: one PASS/FAIL line per criterion. argv[1] is the fforms CLI
// (used by the reproducibility check); run from the source directory.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "fforms/convert.hpp"
#include "fforms/copula.hpp"
#include "fforms/errors.hpp"
#include "fforms/experiments.hpp"
#include "fforms/io.hpp"
#include "fforms/metrics.hpp"
#include "fforms/oracle.hpp"
#include "fforms/rng.hpp"
#include "fforms/special.hpp"
#include "fforms/synth.hpp"
#include "fforms/tasks.hpp"

using namespace fforms;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

ParametricForecast gaussians(const std::vector<Gaussian>& gs) {
    ParametricForecast f{{0, gs.size(), {}}, Family::gaussian, {}};
    for (const auto& g : gs) f.params.push_back(g);
    return f;
}

std::vector<std::size_t> whole(std::size_t h) {
    std::vector<std::size_t> w(h);
    std::iota(w.begin(), w.end(), 0);
    return w;
}

std::vector<fs::path> corpus() {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator("data/oracle"))
        if (e.path().extension() == ".json") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

// Sup distance between the empirical CDF of xs and F, checked on both sides of each jump.
double dkw_distance(std::vector<double> xs, const std::function<double(double)>& F) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = F(xs[i]);
        d = std::max({d, std::abs(static_cast<double>(i + 1) / n - f), std::abs(static_cast<double>(i) / n - f)});
    }
    return d;
}

// ---- 1 ---------------------------------------------------------------------------------------

Outcome exact_witness() {
    const auto ind = io::load_joint("data/oracle/bern2_independent.json");
    const auto diag = io::load_joint("data/oracle/bern2_diagonal.json");
    for (std::size_t k = 0; k < 2; ++k)
        if (marginalize(ind, k) != marginalize(diag, k)) return {false, "marginals differ"};
    const EventSpec e{{0, 1}, Functional::max, Comparator::ge, 1.0};
    const double a = enumerate_event_probability(ind, e);
    const double b = enumerate_event_probability(diag, e);
    return {a == 0.75 && b == 0.5, fmt("independent %.17g, diagonal %.17g", a, b)};
}

// ---- 2 ---------------------------------------------------------------------------------------

Outcome continuous_witness() {
    const auto f = gaussians({{0, 1}, {0, 1}});
    const EventSpec e{{0, 1}, Functional::max, Comparator::le, 0.0};
    const double want[] = {0.25, 0.5, 0.0};
    const CopulaSpec cs[] = {copula::Independence{}, copula::Comonotonic{}, copula::Countermonotonic{}};
    double got[3];
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
        got[i] = event_probability_marginal(f, e, cs[i], 100000, 20240).probability;
        ok = ok && std::abs(got[i] - want[i]) <= 0.01;
    }
    return {ok, fmt("%.4f / %.4f / %.4f", got[0], got[1], got[2])};
}

// ---- 3 ---------------------------------------------------------------------------------------

Outcome marginal_fidelity() {
    const std::size_t M = 10000;
    const double bound = 1.63 / std::sqrt(static_cast<double>(M));
    ParametricForecast f3{{0, 3, {}}, Family::gaussian, {Gaussian{0, 1}, Gaussian{2, 0.5}, Gaussian{-1, 3}}};
    ParametricForecast f2{{0, 2, {}}, Family::gaussian, {Gaussian{1, 2}, Gaussian{0, 0.3}}};
    Rng rng(55, 0);
    TrajectoryEnsemble ref{{0, 3, {}}, Matrix(300, 3), {}};
    for (std::size_t m = 0; m < 300; ++m) {
        double x = rng.normal();
        for (std::size_t k = 0; k < 3; ++k) ref.paths(m, k) = x = 0.7 * x + rng.normal();
    }
    const std::vector<std::pair<std::string, CopulaSpec>> specs{
        {"independence", copula::Independence{}},
        {"comonotonic", copula::Comonotonic{}},
        {"countermonotonic", copula::Countermonotonic{}},
        {"gaussian_ar1", copula::GaussianAr1{0.8}},
        {"gaussian_full", copula::GaussianFull{ar1_correlation(-0.4, 3)}},
        {"student_t", copula::StudentT{ar1_correlation(0.6, 3), 4.0}},
        {"ecc_r", copula::Ecc{ref, copula::EccVariant::r}},
        {"ecc_q", copula::Ecc{ref, copula::EccVariant::q}},
    };
    double worst = 0.0;
    bool ok = true;
    std::uint64_t seed = 300;
    for (const auto& [name, spec] : specs) {
        const auto& f = std::holds_alternative<copula::Countermonotonic>(spec) ? f2 : f3;
        const auto ens = marginals_to_trajectory(f, spec, M, seed++).ensemble;
        for (std::size_t k = 0; k < f.meta.horizon; ++k) {
            const double d = dkw_distance(ens.paths.column(k), [&](double x) { return cdf(f.params[k], x); });
            worst = std::max(worst, d);
            ok = ok && d <= bound;
        }
    }
    // Quantile-grid marginals lifted through interpolants with GPD tails.
    const std::vector<double> lv{0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99};
    QuantileForecast q{{0, 2, {}}, lv, Matrix(2, lv.size())};
    for (std::size_t l = 0; l < lv.size(); ++l) {
        q.values(0, l) = quantile(Gaussian{1, 2}, lv[l]);
        q.values(1, l) = quantile(StudentT{0, 1, 3}, lv[l]);
    }
    LiftOptions lift;
    lift.tails.kind = TailPolicy::Kind::gpd;
    const auto qi = quantile_to_interpolated_cdf(q, lift.tails);
    const auto qe = marginals_to_trajectory(q, copula::GaussianAr1{0.5}, M, seed++, lift).ensemble;
    for (std::size_t k = 0; k < 2; ++k) {
        const double d = dkw_distance(qe.paths.column(k), [&](double x) { return cdf(qi.params[k], x); });
        worst = std::max(worst, d);
        ok = ok && d <= bound;
    }
    return {ok, fmt("worst sup distance %.5f vs bound %.5f over %g copulas", worst, bound, specs.size() + 1.0)};
}

// ---- 4 ---------------------------------------------------------------------------------------

Outcome identifiability() {
    const Gaussian g{1.7, 0.45};
    QuantileForecast two{{0, 1, {}}, {0.1, 0.9}, Matrix::from_rows({{quantile(g, 0.1), quantile(g, 0.9)}})};
    const auto mm = std::get<Gaussian>(quantile_to_parametric_moment_match(two, {0.1, 0.9}).params[0]);
    const double mm_err = std::max(std::abs(mm.mu - g.mu), std::abs(mm.sigma - g.sigma));

    bool refused = false;
    QuantileForecast med{{0, 1, {}}, {0.5}, Matrix::from_rows({{1.7}})};
    try {
        quantile_to_parametric_moment_match(med, {0.5, 0.5});
    } catch (const InvalidInput&) {
        refused = true;
    }
    bool reg_refused = false;
    try {
        quantile_to_parametric_regression(med, Family::gaussian, WeightMode::equal);
    } catch (const InvalidInput&) {
        reg_refused = true;
    }

    const Gaussian t{2, 3};
    std::vector<double> levels;
    for (int i = 1; i <= 9; ++i) levels.push_back(i / 10.0);
    QuantileForecast grid{{0, 1, {}}, levels, Matrix(1, 9)};
    for (std::size_t l = 0; l < 9; ++l) grid.values(0, l) = quantile(t, levels[l]);
    double reg_err = 0.0;
    for (auto mode : {WeightMode::equal, WeightMode::asymptotic}) {
        const auto r = std::get<Gaussian>(quantile_to_parametric_regression(grid, Family::gaussian, mode).forecast.params[0]);
        reg_err = std::max({reg_err, std::abs(r.mu - 2), std::abs(r.sigma - 3)});
    }
    const bool ok = mm_err <= 1e-10 && refused && reg_refused && reg_err <= 1e-6;
    return {ok, fmt("moment error %.2e, regression error %.2e, median-only refused %g/%g", mm_err, reg_err, refused,
                    reg_refused)};
}

// ---- 5 ---------------------------------------------------------------------------------------

Outcome oracle_equivalence() {
    const std::size_t M = 50000;
    std::size_t checks = 0;
    std::size_t failures = 0;
    std::size_t joints = 0;
    double worst_z = 0.0;
    std::string first_failure;
    auto check = [&](const std::string& what, double mc, double exact) {
        ++checks;
        const double se = std::sqrt(std::max(exact * (1 - exact), 0.0) / static_cast<double>(M));
        const double diff = std::abs(mc - exact);
        if (se > 0) worst_z = std::max(worst_z, diff / se);
        if (diff > std::max(3 * se, 1e-12)) {
            ++failures;
            if (first_failure.empty()) first_failure = what + fmt(" mc %.5f exact %.5f", mc, exact);
        }
    };
    std::uint64_t seed = 5000;
    for (const auto& path : corpus()) {
        const auto j = io::load_joint(path);
        if (j.horizon() > 3) continue;
        ++joints;
        const auto name = path.stem().string();
        const auto ens = sample(j, M, seed++);
        std::vector<double> vals;
        for (const auto& s : j.support) vals.insert(vals.end(), s.begin(), s.end());
        std::sort(vals.begin(), vals.end());
        const double c = vals[vals.size() / 2];
        const auto all = whole(j.horizon());
        std::vector<EventSpec> events{{all, Functional::max, Comparator::ge, c},
                                      {all, Functional::sum, Comparator::le, c * static_cast<double>(j.horizon())},
                                      {all, Functional::min, Comparator::le, c}};
        for (std::size_t last = 0; last < std::min<std::size_t>(2, j.horizon()); ++last)
            events.push_back({whole(last + 1), Functional::first_crossing, Comparator::ge, c});
        for (const auto& e : events)
            check(name + " event", event_probability(ens, e).probability, enumerate_event_probability(j, e));
        const auto se = exact_survival(j, c, Comparator::ge);
        const auto sm = survival_from_trajectories(ens, c, Comparator::ge);
        for (std::size_t k = 0; k < j.horizon(); ++k) check(name + " survival", sm.curve.survival[k], se.curve.survival[k]);
        const auto agg = window_aggregate(ens, all, AggregateOutput::distribution);
        double cum = 0.0;
        for (const auto& [z, p] : exact_aggregate(j, all)) {
            cum += p;
            check(name + " aggregate", agg.distribution->cdf(z + 1e-9), std::min(cum, 1.0));
        }
    }
    const bool ok = joints >= 10 && failures == 0;
    return {ok, fmt("%g joints, %g checks, %g outside 3 SE, worst |z| %.2f", joints, checks, failures, worst_z) +
                    (first_failure.empty() ? "" : "; first: " + first_failure)};
}

// ---- 6 ---------------------------------------------------------------------------------------

Outcome crps_consistency() {
    const double exact = crps_gaussian(0, 1, 0);
    double gap = 0.0;
    std::vector<double> xs(10000);
    for (std::uint64_t s = 0; s < 100; ++s) {
        for (std::size_t m = 0; m < xs.size(); ++m) xs[m] = Rng(s, m).normal();
        gap += std::abs(crps_ensemble(xs, 0.0) - exact);
    }
    gap /= 100.0;
    return {gap < 0.01 && std::abs(exact - 0.23369) < 5e-6, fmt("closed form %.6f, mean |gap| %.5f", exact, gap)};
}

// ---- 7 ---------------------------------------------------------------------------------------

Outcome conformal_coverage() {
    const double rho = 0.8;
    const std::size_t h = 6;
    auto to_cal = [&](const std::vector<Ar1Window>& ws) {
        CalibrationSet cal;
        for (const auto& w : ws) cal.records.push_back({PointForecast{{0, h, {}}, w.truth.mean}, w.realization});
        return cal;
    };
    const auto cal = to_cal(simulate_ar1_windows(rho, h, 5000, 71));
    const auto test = simulate_ar1_windows(rho, h, 2000, 72);
    bool ok = true;
    std::string detail;
    for (double alpha : {0.1, 0.2}) {
        std::vector<std::size_t> inside(h, 0);
        std::size_t joint = 0;
        for (const auto& w : test) {
            const PointForecast f{{0, h, {}}, w.truth.mean};
            const auto iv = point_to_intervals_conformal(f, cal, {alpha, ConformalConfig::Mode::per_step, {}});
            for (std::size_t k = 0; k < h; ++k)
                inside[k] += (w.realization[k] >= iv.lower[k] && w.realization[k] <= iv.upper[k]) ? 1 : 0;
            const auto band =
                point_to_band_conformal_pathwise(f, cal, {alpha, ConformalConfig::Mode::pathwise_sup_norm, {}});
            joint += band.contains(w.realization) ? 1 : 0;
        }
        double lo = 1.0, hi = 0.0;
        for (auto c : inside) {
            const double r = static_cast<double>(c) / test.size();
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        const double sim = static_cast<double>(joint) / test.size();
        ok = ok && lo >= 1 - alpha - 0.03 && hi <= 1 - alpha + 0.03 && sim >= 1 - alpha - 0.03;
        detail += fmt("alpha %.1f: per-step [%.4f, %.4f], pathwise %.4f; ", alpha, lo, hi, sim);
    }
    return {ok, detail};
}

// ---- 8 ---------------------------------------------------------------------------------------

Outcome dependence_diagnostic() {
    const auto r = dependence_experiment(0.8, 8, 500, 500, 8080);
    const bool ok = r.crps_relative_gap < 0.02 && r.energy_z() > 3 && r.variogram_z() > 3;
    return {ok, fmt("CRPS gap %.2f%%, energy %.3f vs %.3f (z %.1f), ", 100 * r.crps_relative_gap, r.energy_true,
                    r.energy_indep, r.energy_z()) +
                    fmt("variogram %.3f vs %.3f (z %.1f)", r.variogram_true, r.variogram_indep, r.variogram_z())};
}

// ---- 9 ---------------------------------------------------------------------------------------

Outcome persistence() {
    const double rho = 0.9;
    // 80th percentile of the stationary law N(0, 1 / (1 - rho^2)).
    const double c = special::normal_quantile(0.8) / std::sqrt(1 - rho * rho);
    const auto r = persistence_experiment(rho, 0.0, c, 10, 100000, 1000000, 9090, derive_seed(9090, 1));
    const bool ok = r.max_independence_gap > 0.05 && r.max_reference_gap <= 0.01;
    return {ok, fmt("threshold %.4f, max |indep - traj| %.4f, max |traj - ref| %.4f", c, r.max_independence_gap,
                    r.max_reference_gap)};
}

// ---- 10 --------------------------------------------------------------------------------------

Outcome identities() {
    bool ok = true;
    std::size_t n = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        Rng rng(s, 0);
        const std::size_t M = 5 + s * 3;
        TrajectoryEnsemble one{{0, 1, {}}, Matrix(M, 1), {}};
        std::vector<double> col(M);
        for (std::size_t m = 0; m < M; ++m) one.paths(m, 0) = col[m] = rng.normal();
        const double y = rng.normal();
        // Equal up to summation order.
        ok = ok && std::abs(energy_score(one, std::vector<double>{y}) - crps_ensemble(col, y)) <=
                       1e-12 * std::max(1.0, crps_ensemble(col, y));
        const double Q = rng.normal();
        ok = ok && pinball(Q, y, 0.5) == 0.5 * std::abs(Q - y);

        const std::size_t h = 1 + s % 5;
        TrajectoryEnsemble e{{0, h, {}}, Matrix(M, h), {}};
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t k = 0; k < h; ++k) e.paths(m, k) = rng.normal();
        for (double alpha : {0.05, 0.2, 0.5}) {
            const auto b = pathwise_band_from_trajectory(e, alpha, s % 2 ? CenterScale::mean_sd : CenterScale::median_mad);
            std::size_t in = 0;
            for (std::size_t m = 0; m < M; ++m) in += b.contains(e.paths.row(m)) ? 1 : 0;
            ok = ok && in >= static_cast<std::size_t>(std::ceil((1 - alpha) * M - 1e-9));
        }

        std::vector<double> haz(h);
        for (auto& x : haz) x = rng.uniform();
        const auto back = hazard_from_survival(survival_from_hazard(haz));
        for (std::size_t k = 0; k < h; ++k) ok = ok && std::abs(back[k] - haz[k]) <= 1e-12;
        ++n;
    }
    return {ok, fmt("%g randomized instances", static_cast<double>(n))};
}

// ---- 11 --------------------------------------------------------------------------------------

Outcome reproducibility(const std::string& cli) {
    const fs::path work = fs::temp_directory_path() / ("fforms_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(work);
    fs::create_directories(work);
    const std::vector<std::string> cmds{
        "convert --in data/sample/quantile.json --to trajectory --copula gaussian_ar1 --rho 0.8 --paths 2000 --seed 5",
        "convert --in data/sample/quantile.json --to trajectory --copula student_t --rho 0.5 --nu 5 --tails gpd "
        "--paths 500 --seed 6",
        "convert --in data/sample/point.json --to trajectory --cal data/sample/calibration.json --bootstrap rows "
        "--paths 1000 --seed 5",
        "convert --in data/sample/parametric.json --to trajectory --copula ecc --reference data/sample/trajectory.json "
        "--paths 300 --seed 8",
        "task event --in data/sample/parametric.json --functional max --threshold 0 --comparator ge "
        "--copula independence --paths 5000 --seed 3",
        "task crossing --in data/sample/quantile.json --threshold -1 --copula gaussian_ar1 --rho 0.8 --seed 3",
        "task scenario --in data/sample/trajectory.json --threshold 0 --rank clustered --k 5 --seed 3",
        "task var --in data/sample/parametric.json --alpha 0.05 --copula comonotonic --seed 4",
        "eval --forecast data/sample/trajectories.json --actuals data/sample/actuals.csv --metrics all "
        "--training data/sample/history.csv --threshold 1 --seed 3",
        "synth --rho 0.8 --n 200 --horizon 4 --windows 5 --paths 50 --seed 9 --out-dir {dir}",
        "demo prop1 --seed 2 --paths 5000",
        "demo prop2 --seed 2 --paths 20000",
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    auto run = [&](std::size_t i, int rep, std::string& captured) {
        const fs::path dir = work / (std::to_string(i) + "_" + std::to_string(rep));
        fs::create_directories(dir);
        std::string args = cmds[i];
        // Commands that write files get the same output path on every run (it is echoed).
        const fs::path shared = work / "out";
        const bool writes = args.find("{dir}") != std::string::npos;
        if (writes) args.replace(args.find("{dir}"), 5, shared.string());
        const fs::path out = dir / "stdout.txt";
        const std::string line = "\"" + cli + "\" " + args + " > \"" + out.string() + "\" 2> \"" + (dir / "stderr.txt").string() + "\"";
        const int rc = std::system(line.c_str());
        if (writes && fs::exists(shared)) fs::rename(shared, dir / "files");
        captured.clear();
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(dir))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) captured += fs::relative(f, dir).string() + "\n" + slurp(f);
        return rc;
    };
    std::size_t identical = 0;
    std::string bad;
    for (std::size_t i = 0; i < cmds.size(); ++i) {
        std::string a, b;
        const int ra = run(i, 0, a);
        const int rb = run(i, 1, b);
        if (ra == 0 && rb == 0 && a == b && a.size() > 40) {
            ++identical;
        } else if (bad.empty()) {
            bad = "'" + cmds[i] + "' exit " + std::to_string(ra) + (a == b ? " (same bytes)" : " (bytes differ)");
        }
    }
    fs::remove_all(work);
    return {identical == cmds.size(),
            fmt("%g of %g commands byte-identical", identical, cmds.size()) + (bad.empty() ? "" : "; failed: " + bad)};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <path-to-fforms-cli>\n");
        return 2;
    }
    const std::string cli = fs::absolute(argv[1]).string();
    struct Criterion {
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"exact dependence witness on {0,1}^2 joints", 1, exact_witness},
        {"continuous dependence witness under three copulas", 10, continuous_witness},
        {"marginal fidelity of copula lifts (DKW)", 30, marginal_fidelity},
        {"two-level identification and regression round trip", 1, identifiability},
        {"Monte Carlo tasks match exact enumeration", 60, oracle_equivalence},
        {"ensemble CRPS matches the Gaussian closed form", 30, crps_consistency},
        {"split conformal coverage on AR(1) windows", 60, conformal_coverage},
        {"path scores detect misspecified dependence", 120, dependence_diagnostic},
        {"persistence: independence vs trajectory survival", 120, persistence},
        {"metric identities", 1, identities},
        {"CLI reproducibility under a fixed seed", 30, [&] { return reproducibility(cli); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= criteria[i].budget_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::printf("%s %2zu %s (%.2f s of %.0f s) - %s%s\n", pass ? "PASS" : "FAIL", i + 1, criteria[i].name, secs,
                    criteria[i].budget_s, o.detail.c_str(), in_time ? "" : " [over time budget]");
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
