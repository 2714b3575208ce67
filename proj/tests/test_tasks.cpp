#include "doctest.h"

#include <cmath>
#include <numeric>

#include "fforms/convert.hpp"
#include "fforms/errors.hpp"
#include "fforms/rng.hpp"
#include "fforms/special.hpp"
#include "fforms/tasks.hpp"

using namespace fforms;

namespace {

TrajectoryEnsemble ensemble(std::vector<std::vector<double>> rows) {
    TrajectoryEnsemble e;
    e.meta.horizon = rows.front().size();
    e.paths = Matrix::from_rows(rows);
    return e;
}

ParametricForecast gaussians(std::vector<Gaussian> gs) {
    ParametricForecast f{{0, gs.size(), {}}, Family::gaussian, {}};
    for (const auto& g : gs) f.params.push_back(g);
    return f;
}

TrajectoryEnsemble losses_as_paths(const std::vector<double>& losses) {
    std::vector<std::vector<double>> rows;
    for (double l : losses) rows.push_back({-l});
    return ensemble(rows);
}

}  // namespace

TEST_CASE("pointwise intervals") {
    const auto iv = pointwise_intervals(gaussians({{0, 1}, {0, 1}}), 0.05);
    CHECK(iv.lower[1] == doctest::Approx(-1.959963984540054).epsilon(1e-12));
    CHECK(iv.upper[0] == doctest::Approx(1.959963984540054).epsilon(1e-12));
    const auto same = pointwise_intervals(ensemble({{1, 2}, {1, 2}, {1, 2}}), 0.1);
    CHECK(same.lower == same.upper);
    std::vector<double> lv;
    for (int i = 1; i <= 9; ++i) lv.push_back(i / 10.0);
    QuantileForecast q{{0, 1, {}}, lv, Matrix(1, 9)};
    for (int i = 0; i < 9; ++i) q.values(0, i) = i;
    CHECK_THROWS_AS(pointwise_intervals(q, 0.02), OutOfSupport);
    const auto qi = pointwise_intervals(q, 0.2);
    CHECK(qi.lower[0] == doctest::Approx(0.0));
    CHECK(qi.upper[0] == doctest::Approx(8.0));
}

TEST_CASE("pathwise band from trajectories") {
    const auto b = pathwise_band_from_trajectory(ensemble({{0, 0}, {2, 2}}), 0.5, CenterScale::median_mad);
    CHECK(b.center == std::vector<double>{1, 1});
    CHECK(b.scale == std::vector<double>{1, 1});
    CHECK(b.multiplier == doctest::Approx(1.0));
    CHECK(b.lower[0] == doctest::Approx(0.0));
    CHECK(b.upper[1] == doctest::Approx(2.0));

    const auto deg = pathwise_band_from_trajectory(ensemble({{3, 4}, {3, 4}}), 0.1, CenterScale::median_mad);
    CHECK(deg.lower[0] == doctest::Approx(3.0));
    CHECK(deg.upper[1] == doctest::Approx(4.0));

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed, 0);
        const std::size_t M = 50 + seed * 7;
        const std::size_t h = 1 + seed % 6;
        TrajectoryEnsemble e;
        e.meta.horizon = h;
        e.paths = Matrix(M, h);
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t k = 0; k < h; ++k) e.paths(m, k) = rng.normal() * (1 + k);
        for (double alpha : {0.05, 0.1, 0.3}) {
            for (auto cs : {CenterScale::median_mad, CenterScale::mean_sd}) {
                const auto band = pathwise_band_from_trajectory(e, alpha, cs);
                std::size_t inside = 0;
                for (std::size_t m = 0; m < M; ++m) inside += band.contains(e.paths.row(m)) ? 1 : 0;
                CHECK(inside >= static_cast<std::size_t>(std::ceil((1 - alpha) * M - 1e-9)));
            }
        }
    }
}

TEST_CASE("Sidak and Bonferroni bands") {
    CHECK(adjusted_alpha(0.19, 2, Correction::sidak) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(adjusted_alpha(0.2, 4, Correction::bonferroni) == doctest::Approx(0.05));
    const auto one = band_sidak(gaussians({{0, 1}}), 0.1, Correction::sidak);
    const auto pw = pointwise_intervals(gaussians({{0, 1}}), 0.1);
    CHECK(one.band.lower[0] == doctest::Approx(pw.lower[0]));
    for (double alpha = 0.05; alpha < 1.0; alpha += 0.1) {
        for (std::size_t h = 2; h <= 6; ++h) {
            std::vector<Gaussian> g(h, Gaussian{1, 2});
            const auto s = band_sidak(gaussians(g), alpha, Correction::sidak);
            const auto b = band_sidak(gaussians(g), alpha, Correction::bonferroni);
            for (std::size_t k = 0; k < h; ++k) {
                CHECK(b.band.lower[k] <= s.band.lower[k]);
                CHECK(b.band.upper[k] >= s.band.upper[k]);
            }
        }
    }
}

TEST_CASE("event probabilities") {
    EventSpec sum{{0, 1}, Functional::sum, Comparator::ge, 0.0};
    const auto e = ensemble({{1, 1}, {-1, -1}});
    CHECK(event_probability(e, sum).probability == 0.5);
    sum.threshold = -5;
    CHECK(event_probability(e, sum).probability == 1.0);
    CHECK(event_probability(e, sum).standard_error == 0.0);

    const auto f = gaussians({{0, 1}, {0, 1}});
    const EventSpec mx{{0, 1}, Functional::max, Comparator::le, 0.0};
    CHECK(std::abs(event_probability_marginal(f, mx, copula::Independence{}, 100000, 1).probability - 0.25) < 0.01);
    CHECK(std::abs(event_probability_marginal(f, mx, copula::Comonotonic{}, 100000, 1).probability - 0.5) < 0.01);
    CHECK(event_probability_marginal(f, mx, copula::Countermonotonic{}, 100000, 1).probability < 0.005);

    CHECK_THROWS_AS(validate_event(EventSpec{{5}, Functional::sum, Comparator::ge, 0}, 2), InvalidInput);
    CHECK_THROWS_AS(validate_event(EventSpec{{}, Functional::sum, Comparator::ge, 0}, 2), InvalidInput);
}

TEST_CASE("value at risk") {
    const auto ten = losses_as_paths({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    CHECK(value_at_risk(ten, 0.1).value_at_risk == 9.0);
    CHECK(value_at_risk(ten, 0.05).value_at_risk == 10.0);
    CHECK(value_at_risk(ensemble({{0, 0}, {0, 0}}), 0.01).value_at_risk == 0.0);

    TrajectoryEnsemble g;
    g.meta.horizon = 5;
    g.paths = Matrix(200000, 5);
    for (std::size_t m = 0; m < 200000; ++m) {
        Rng rng(77, m);
        for (std::size_t k = 0; k < 5; ++k) g.paths(m, k) = rng.normal();
    }
    CHECK(std::abs(value_at_risk(g, 0.05).value_at_risk - std::sqrt(5.0) * 1.6448536269514722) < 0.03);
    CHECK(loss_tail_probability(ten, 8.0) == doctest::Approx(0.2));
}

TEST_CASE("survival curves") {
    const std::vector<double> half{0.5, 0.5};
    CHECK(survival_product(half).survival == std::vector<double>{0.5, 0.25});
    const std::vector<double> none{0, 0, 0};
    CHECK(survival_product(none).survival == std::vector<double>{1, 1, 1});
    const std::vector<double> first{1, 0.3};
    CHECK(survival_product(first).survival == std::vector<double>{0, 0});

    const auto s = survival_from_trajectories(ensemble({{5, 0}, {0, 0}}), 1.0, Comparator::ge);
    CHECK(s.hitting_mass[0] == 0.5);
    CHECK(s.curve.survival == std::vector<double>{0.5, 0.5});
    CHECK(s.curve.censored_mass == 0.5);
    const auto never = survival_from_trajectories(ensemble({{0, 0}, {0, 0}}), 1.0, Comparator::ge);
    CHECK(never.curve.survival == std::vector<double>{1, 1});

    // Marginal route: P(Y >= 0) = 0.5 at both steps.
    const auto m = survival_from_marginals(gaussians({{0, 1}, {0, 1}}), 0.0, Comparator::ge);
    CHECK(m.independence_approximation);
    CHECK(m.curve.survival[0] == doctest::Approx(0.5));
    CHECK(m.curve.survival[1] == doctest::Approx(0.25));
}

TEST_CASE("hazard and survival are inverse maps") {
    CHECK(hazard_from_survival({{0.5, 0.25}, 0.25}) == std::vector<double>{0.5, 0.5});
    CHECK(hazard_from_survival({{1, 1}, 1}) == std::vector<double>{0, 0});
    CHECK(hazard_from_survival({{0, 0}, 0}) == std::vector<double>{1, 0});
    Rng rng(4, 0);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> haz(1 + t % 9);
        for (auto& x : haz) x = rng.uniform() * 0.5;
        const auto s = survival_from_hazard(haz);
        const auto back = hazard_from_survival(s);
        for (std::size_t k = 0; k < haz.size(); ++k) CHECK(std::abs(back[k] - haz[k]) < 1e-12);
        const auto s2 = survival_from_hazard(back);
        for (std::size_t k = 0; k < haz.size(); ++k) CHECK(std::abs(s2.survival[k] - s.survival[k]) < 1e-12);
    }
}

TEST_CASE("window aggregates") {
    const auto e = ensemble({{1, 2}, {3, 4}});
    const std::vector<std::size_t> both{0, 1};
    const auto a = window_aggregate(e, both, AggregateOutput::distribution);
    CHECK(a.mean == 5.0);
    CHECK(a.distribution->values() == std::vector<double>{3, 7});
    const std::vector<std::size_t> second{1};
    CHECK(window_aggregate(e, second, AggregateOutput::distribution).distribution->values() == std::vector<double>{2, 4});

    PointForecast p{{0, 2, {}}, {1, 2}};
    const auto pm = window_aggregate(p, both, AggregateOutput::mean);
    CHECK(pm.mean == 3.0);
    CHECK_THROWS_AS(window_aggregate(p, both, AggregateOutput::distribution), Unsupported);

    // Closed form for independent Gaussians agrees with Monte Carlo.
    const auto f = gaussians({{1, 1}, {2, 2}, {-1, 0.5}});
    Assumptions as;
    as.copula = copula::Independence{};
    as.paths = 50000;
    as.seed = 3;
    const std::vector<std::size_t> all{0, 1, 2};
    const auto cf = run_aggregate(f, all, AggregateOutput::distribution, as);
    REQUIRE(cf.closed_form);
    CHECK(cf.closed_form->mu == doctest::Approx(2.0));
    CHECK(cf.closed_form->sigma == doctest::Approx(std::sqrt(5.25)));
    const auto mc = marginals_to_trajectory(f, copula::Independence{}, 50000, 3).ensemble;
    const auto agg = window_aggregate(mc, all, AggregateOutput::distribution);
    const double se = std::sqrt(5.25 / 50000.0);
    CHECK(std::abs(agg.mean - 2.0) < 3 * se);
    const double p_below = agg.distribution->cdf(2.5);
    const double exact = special::normal_cdf(0.5 / std::sqrt(5.25));
    CHECK(std::abs(p_below - exact) < 3 * std::sqrt(exact * (1 - exact) / 50000.0));
}

TEST_CASE("scenario functionals and ranking") {
    const auto e = ensemble({{1, 5, 2}, {0.5, 0.5, 0.5}, {1, 2, 3}});
    const auto s = scenario_functionals(e, 3.0);
    CHECK(s.records[0].peak == 5.0);
    CHECK(s.records[0].exceedances == 1);
    CHECK(s.records[0].cumulative == 8.0);
    CHECK(s.records[1].exceedances == 0);
    CHECK(s.records[1].cumulative == 1.5);
    CHECK(s.records[2].peak == 3.0);

    std::vector<std::vector<double>> rows;
    std::vector<double> losses;
    for (int i = 1; i <= 10; ++i) {
        rows.push_back({static_cast<double>(i % 4), static_cast<double>(i)});
        losses.push_back(i);
    }
    const auto ens = ensemble(rows);
    const auto r = scenario_rank_per_path(ens, losses);
    for (std::size_t i = 0; i < 10; ++i) CHECK(r.ranked[i].loss == 10.0 - static_cast<double>(i));
    CHECK(r.exceedance.at(0.5) == 1.0);
    CHECK(r.exceedance.at(11.0) == 0.0);

    const auto c = scenario_rank_clustered(ens, losses, {10, 1, 2.0, 100});
    CHECK(c.clusters.size() == 10);
    for (const auto& cl : c.clusters) {
        CHECK(cl.members.size() == 1);
        CHECK(cl.weight == doctest::Approx(0.1));
    }
    const auto c3 = scenario_rank_clustered(ens, losses, {3, 1, 2.0, 100});
    double w = 0;
    for (const auto& cl : c3.clusters) w += cl.weight;
    CHECK(w == doctest::Approx(1.0));
    CHECK_THROWS_AS(scenario_rank_clustered(ens, losses, {11, 1, 2.0, 100}), InvalidInput);
}

TEST_CASE("compatibility dispatch") {
    PointForecast p{{0, 2, {}}, {1, 2}};
    Assumptions none;
    EventSpec ev{{0, 1}, Functional::max, Comparator::ge, 1.0};
    CHECK_THROWS_AS(run_event(p, ev, none), Unsupported);
    CHECK(task_support(Task::event, ForecastKind::trajectory) == Support::native);
    CHECK(task_support(Task::event, ForecastKind::quantile) == Support::with_assumptions);
    CHECK(task_support(Task::interval, ForecastKind::point) == Support::with_assumptions);
    CHECK(task_support(Task::var, ForecastKind::point) == Support::unsupported);

    const auto f = gaussians({{0, 1}, {0, 1}});
    CHECK_THROWS_AS(run_event(f, ev, none), MissingAssumption);
    Assumptions no_seed;
    no_seed.copula = copula::Independence{};
    CHECK_THROWS_AS(run_event(f, ev, no_seed), InvalidInput);
    CHECK_THROWS_AS(run_intervals(p, 0.1, none), MissingAssumption);

    const auto crossing = run_crossing(f, 0.0, Comparator::ge, none);
    CHECK(crossing.independence_approximation);
    Assumptions lifted = no_seed;
    lifted.seed = 2;
    lifted.paths = 2000;
    const auto lc = run_crossing(f, 0.0, Comparator::ge, lifted);
    CHECK_FALSE(lc.independence_approximation);
    CHECK(lc.provenance.copula.has_value());
}
