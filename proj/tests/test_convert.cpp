#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fforms/convert.hpp"
#include "fforms/copula.hpp"
#include "fforms/errors.hpp"
#include "fforms/special.hpp"
#include "fforms/synth.hpp"

using namespace fforms;

namespace {

TrajectoryEnsemble ensemble(std::vector<std::vector<double>> rows) {
    TrajectoryEnsemble e;
    e.meta.horizon = rows.front().size();
    e.paths = Matrix::from_rows(rows);
    return e;
}

QuantileForecast gaussian_grid(double mu, double sigma, std::vector<double> levels, std::size_t h = 1) {
    QuantileForecast q;
    q.meta.horizon = h;
    q.levels = levels;
    q.values = Matrix(h, levels.size());
    for (std::size_t k = 0; k < h; ++k)
        for (std::size_t l = 0; l < levels.size(); ++l) q.values(k, l) = mu + sigma * special::normal_quantile(levels[l]);
    return q;
}

std::vector<double> grid(double lo, double hi, double step) {
    std::vector<double> v;
    for (double x = lo; x <= hi + 1e-12; x += step) v.push_back(std::round(x * 1000) / 1000);
    return v;
}

CalibrationSet point_cal(const std::vector<std::vector<double>>& residuals) {
    CalibrationSet cal;
    for (const auto& r : residuals) {
        PointForecast f{{0, r.size(), {}}, std::vector<double>(r.size(), 0.0)};
        cal.records.push_back({f, r});
    }
    return cal;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("trajectory marginalization") {
    const auto e = ensemble({{1, 5}, {2, 5}, {3, 5}, {4, 5}});
    const std::vector<double> lv{0.25, 0.5, 0.9};
    const auto q = traj_to_quantile(e, lv);
    CHECK(q.values(0, 0) == 1.0);
    CHECK(q.values(0, 1) == 2.0);
    CHECK(q.values(1, 0) == 5.0);
    CHECK(q.values(1, 2) == 5.0);

    const auto p = traj_to_parametric(ensemble({{-1, 0}, {1, 1}}), Family::gaussian);
    CHECK(std::get<Gaussian>(p.params[0]).mu == 0.0);
    CHECK(std::get<Gaussian>(p.params[0]).sigma == 1.0);
    CHECK_THROWS_AS(traj_to_parametric(ensemble({{1, 1}, {1, 1}}), Family::gaussian), InvalidInput);

    const auto emp = traj_to_parametric(e, Family::empirical);
    const std::vector<double> col{1, 2, 3, 4};
    CHECK(std::get<EmpiricalInterpolant>(emp.params[0]) == empirical_cdf(col));

    CHECK(traj_to_point(ensemble({{0, 2}, {2, 0}}), Statistic::mean).values == std::vector<double>{1, 1});
    CHECK(traj_to_point(ensemble({{0, 9}, {1, 9}, {10, 9}}), Statistic::median).values[0] == 1.0);
    CHECK(traj_to_point(ensemble({{3, 4}}), Statistic::median).values == std::vector<double>{3, 4});
}

TEST_CASE("lateral conversions") {
    ParametricForecast f{{0, 2, {}}, Family::gaussian, {Gaussian{0, 1}, Gaussian{1, 1}}};
    const std::vector<double> lv{0.025, 0.5, 0.975};
    const auto q = parametric_to_quantile(f, lv);
    CHECK(q.values(0, 0) == doctest::Approx(-1.959963984540054).epsilon(1e-12));
    CHECK(q.values(0, 1) == doctest::Approx(0.0));
    CHECK(q.values(1, 2) > q.values(0, 2));

    ParametricForecast g{{0, 1, {}}, Family::gaussian, {Gaussian{3, 5}}};
    CHECK(parametric_to_point(g, Statistic::mean).values[0] == 3.0);
    ParametricForecast t{{0, 1, {}}, Family::student_t, {StudentT{2, 1, 5}}};
    CHECK(parametric_to_point(t, Statistic::median).values[0] == doctest::Approx(2.0));
    ParametricForecast heavy{{0, 1, {}}, Family::student_t, {StudentT{2, 1, 0.5}}};
    CHECK_THROWS_AS(parametric_to_point(heavy, Statistic::mean), InvalidInput);
}

TEST_CASE("copula samplers") {
    const auto co = sample_copula(copula::Comonotonic{}, 50, 4, 1);
    for (std::size_t m = 0; m < 50; ++m)
        for (std::size_t k = 1; k < 4; ++k) CHECK(co(m, k) == co(m, 0));
    const auto cm = sample_copula(copula::Countermonotonic{}, 50, 2, 1);
    for (std::size_t m = 0; m < 50; ++m) CHECK(cm(m, 1) == doctest::Approx(1.0 - cm(m, 0)).epsilon(1e-15));
    CHECK_THROWS_AS(sample_copula(copula::Countermonotonic{}, 5, 3, 1), InvalidInput);

    const auto ind = sample_copula(copula::GaussianAr1{0.0}, 100000, 2, 9);
    CHECK(std::abs(pearson(ind.column(0), ind.column(1))) < 0.01);

    // Gaussian copula with rho: normal scores have correlation rho.
    const auto ar = sample_copula(copula::GaussianAr1{0.6}, 50000, 3, 4);
    std::vector<double> z0, z1, z2;
    for (std::size_t m = 0; m < ar.rows(); ++m) {
        z0.push_back(special::normal_quantile(ar(m, 0)));
        z1.push_back(special::normal_quantile(ar(m, 1)));
        z2.push_back(special::normal_quantile(ar(m, 2)));
    }
    CHECK(pearson(z0, z1) == doctest::Approx(0.6).epsilon(0.03));
    CHECK(pearson(z0, z2) == doctest::Approx(0.36).epsilon(0.05));

    // Same seed, same draws.
    CHECK(sample_copula(copula::GaussianAr1{0.3}, 10, 3, 5) == sample_copula(copula::GaussianAr1{0.3}, 10, 3, 5));

    Matrix notpd = Matrix::from_rows({{1, 0.99, 0}, {0.99, 1, 0.99}, {0, 0.99, 1}});
    CHECK_THROWS_AS(validate_copula(copula::GaussianFull{notpd}, 3), InvalidInput);
}

TEST_CASE("ECC imposes the reference rank pattern") {
    auto ref = ensemble({{1, 10}, {2, 30}, {3, 20}, {4, 40}});
    const auto u = sample_copula(copula::Ecc{ref, copula::EccVariant::q}, 4, 2, 3);
    // With M equal to the reference size, Q-ordering maps row m to reference row m.
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = 0; b < 4; ++b) {
            CHECK((u(a, 0) < u(b, 0)) == (ref.paths(a, 0) < ref.paths(b, 0)));
            CHECK((u(a, 1) < u(b, 1)) == (ref.paths(a, 1) < ref.paths(b, 1)));
        }
}

TEST_CASE("marginals to trajectory") {
    ParametricForecast f{{0, 3, {}}, Family::gaussian, {Gaussian{0, 1}, Gaussian{0, 1}, Gaussian{0, 1}}};
    const auto co = marginals_to_trajectory(f, copula::Comonotonic{}, 100, 2).ensemble;
    for (std::size_t m = 0; m < 100; ++m) CHECK(co.paths(m, 0) == co.paths(m, 2));

    ParametricForecast f2{{0, 2, {}}, Family::gaussian, {Gaussian{0, 1}, Gaussian{0, 1}}};
    auto both_le0 = [](const TrajectoryEnsemble& e) {
        double c = 0;
        for (std::size_t m = 0; m < e.size(); ++m) c += (e.paths(m, 0) <= 0 && e.paths(m, 1) <= 0) ? 1 : 0;
        return c / static_cast<double>(e.size());
    };
    CHECK(both_le0(marginals_to_trajectory(f2, copula::Independence{}, 100000, 8).ensemble) == doctest::Approx(0.25).epsilon(0.04));
    CHECK(both_le0(marginals_to_trajectory(f2, copula::Comonotonic{}, 100000, 8).ensemble) == doctest::Approx(0.5).epsilon(0.02));

    // Interpolant marginals without tails clip and count; strict mode refuses.
    auto q = gaussian_grid(0, 1, {0.1, 0.5, 0.9}, 2);
    const auto r = marginals_to_trajectory(q, copula::Independence{}, 1000, 3);
    CHECK(r.clipped_draws > 0);
    for (std::size_t m = 0; m < 1000; ++m) CHECK(r.ensemble.paths(m, 0) >= q.values(0, 0));
    CHECK_THROWS_AS(marginals_to_trajectory(q, copula::Independence{}, 1000, 3, LiftOptions{{}, true}), OutOfSupport);
}

TEST_CASE("two-level moment match") {
    QuantileForecast q{{0, 1, {}}, {0.25, 0.75}, Matrix::from_rows({{-0.6744897501960817, 0.6744897501960817}})};
    const auto f = quantile_to_parametric_moment_match(q, {0.25, 0.75});
    CHECK(std::abs(std::get<Gaussian>(f.params[0]).mu) < 1e-12);
    CHECK(std::get<Gaussian>(f.params[0]).sigma == doctest::Approx(1.0).epsilon(1e-12));
    QuantileForecast flat{{0, 1, {}}, {0.25, 0.75}, Matrix::from_rows({{1.0, 1.0}})};
    CHECK_THROWS_AS(quantile_to_parametric_moment_match(flat, {0.25, 0.75}), InvalidInput);
    CHECK_THROWS_AS(quantile_to_parametric_moment_match(q, {0.5, 0.5}), InvalidInput);
}

TEST_CASE("quantile regression fits") {
    const auto lv = grid(0.1, 0.9, 0.1);
    const auto q = gaussian_grid(2, 3, lv);
    const auto eq = quantile_to_parametric_regression(q, Family::gaussian, WeightMode::equal);
    const auto as = quantile_to_parametric_regression(q, Family::gaussian, WeightMode::asymptotic);
    const auto& ge = std::get<Gaussian>(eq.forecast.params[0]);
    const auto& ga = std::get<Gaussian>(as.forecast.params[0]);
    CHECK(std::abs(ge.mu - 2) < 1e-6);
    CHECK(std::abs(ge.sigma - 3) < 1e-6);
    CHECK(std::abs(ge.mu - ga.mu) < 1e-6);
    CHECK(std::abs(ge.sigma - ga.sigma) < 1e-6);

    QuantileForecast two{{0, 1, {}}, {0.1, 0.9}, Matrix::from_rows({{-1, 1}})};
    CHECK_THROWS_AS(quantile_to_parametric_regression(two, Family::student_t, WeightMode::equal), InvalidInput);

    // Student t round trip on an exact grid.
    QuantileForecast tq{{0, 1, {}}, grid(0.05, 0.95, 0.05), Matrix(1, 19)};
    for (std::size_t l = 0; l < 19; ++l) tq.values(0, l) = quantile(FamilyParams{StudentT{1, 2, 4}}, tq.levels[l]);
    const auto tf = quantile_to_parametric_regression(tq, Family::student_t, WeightMode::equal);
    const auto& t = std::get<StudentT>(tf.forecast.params[0]);
    CHECK(t.mu == doctest::Approx(1).epsilon(1e-3));
    CHECK(t.sigma == doctest::Approx(2).epsilon(1e-2));
    CHECK(t.nu == doctest::Approx(4).epsilon(5e-2));
}

TEST_CASE("interpolated cdf and tails") {
    QuantileForecast q{{0, 1, {}}, {0.1, 0.9}, Matrix::from_rows({{1, 3}})};
    const auto f = quantile_to_interpolated_cdf(q);
    CHECK(quantile(f.params[0], 0.5) == doctest::Approx(2.0));
    CHECK_THROWS_AS(quantile(f.params[0], 0.95), OutOfSupport);

    const auto g = gaussian_grid(0, 1, grid(0.05, 0.95, 0.05));
    const auto t = quantile_to_interpolated_cdf(g, TailPolicy{TailPolicy::Kind::gpd, {}, {}});
    const double q99 = quantile(t.params[0], 0.99);
    CHECK(std::isfinite(q99));
    CHECK(q99 > g.values(0, 18));
    const double q01 = quantile(t.params[0], 0.01);
    CHECK(q01 < g.values(0, 0));
}

TEST_CASE("quantile to point") {
    const auto lv = grid(0.1, 0.9, 0.1);
    const auto g = gaussian_grid(0, 1, lv);
    CHECK(quantile_to_point(g, Statistic::median).forecast.values[0] == g.values(0, 4));
    CHECK(std::abs(quantile_to_point(g, Statistic::mean).forecast.values[0]) < 1e-12);
    QuantileForecast u{{0, 1, {}}, lv, Matrix(1, lv.size())};
    for (std::size_t l = 0; l < lv.size(); ++l) u.values(0, l) = lv[l];
    const auto r = quantile_to_point(u, Statistic::mean);
    CHECK(r.forecast.values[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("split conformal") {
    CHECK(conformal_rank(4, 0.2) == 4);
    CHECK(conformal_rank(1000, 0.1) == 901);
    CHECK_THROWS_AS(conformal_rank(4, 0.01), InvalidInput);

    const auto cal = point_cal({{1}, {-2}, {3}, {-4}});
    PointForecast f{{0, 1, {}}, {10}};
    const auto iv = point_to_intervals_conformal(f, cal, {0.2, ConformalConfig::Mode::per_step, {}});
    CHECK(iv.lower[0] == 6.0);
    CHECK(iv.upper[0] == 14.0);

    const auto zero = point_cal({{0}, {0}, {0}, {0}});
    const auto z = point_to_intervals_conformal(f, zero, {0.2, ConformalConfig::Mode::per_step, {}});
    CHECK(z.lower[0] == z.upper[0]);

    ConformalConfig pw{0.2, ConformalConfig::Mode::pathwise_sup_norm, {1.0, 1.0}};
    const auto band = point_to_band_conformal_pathwise(PointForecast{{0, 2, {}}, {0, 0}},
                                                       point_cal({{1, 0}, {0, 2}, {-3, 1}, {0, 4}}), pw);
    CHECK(band.multiplier == 4.0);

    const auto single = point_cal({{0, 0}});
    const auto deg = point_to_band_conformal_pathwise(PointForecast{{0, 2, {}}, {0, 0}}, single,
                                                      {0.5, ConformalConfig::Mode::pathwise_sup_norm, {}});
    CHECK(deg.multiplier == 0.0);
    CHECK(deg.lower == deg.upper);
}

TEST_CASE("pathwise conformal covers held-out AR(1) windows") {
    const double rho = 0.8;
    const std::size_t h = 6;
    auto to_cal = [&](const std::vector<Ar1Window>& ws) {
        CalibrationSet cal;
        for (const auto& w : ws) cal.records.push_back({PointForecast{{0, h, {}}, w.truth.mean}, w.realization});
        return cal;
    };
    const auto cal = to_cal(simulate_ar1_windows(rho, h, 500, 100));
    const auto test = simulate_ar1_windows(rho, h, 2000, 200);
    std::size_t inside = 0;
    for (const auto& w : test) {
        const auto band = point_to_band_conformal_pathwise(PointForecast{{0, h, {}}, w.truth.mean}, cal,
                                                           {0.1, ConformalConfig::Mode::pathwise_sup_norm, {}});
        inside += band.contains(w.realization) ? 1 : 0;
    }
    CHECK(static_cast<double>(inside) / 2000.0 >= 0.87);
}

TEST_CASE("residual bootstrap") {
    PointForecast f{{0, 2, {}}, {5, 7}};
    const auto zero = point_to_trajectory_bootstrap(f, point_cal({{0, 0}, {0, 0}}), 20, BootstrapMode::rows, 1);
    for (std::size_t m = 0; m < 20; ++m) CHECK(zero.paths(m, 1) == 7.0);

    const auto pm = point_to_trajectory_bootstrap(f, point_cal({{-1, -1}, {1, 1}}), 10000, BootstrapMode::by_lead, 4);
    CHECK(std::abs(EmpiricalDistribution(pm.paths.column(0)).mean() - 5.0) < 0.02);
    CHECK(std::abs(EmpiricalDistribution(pm.paths.column(1)).mean() - 7.0) < 0.02);

    // Step spread follows its own residual pool.
    const auto cal = point_cal({{-1, -4}, {1, 4}, {-1, 4}, {1, -4}});
    const auto bl = point_to_trajectory_bootstrap(f, cal, 10000, BootstrapMode::by_lead, 6);
    auto var = [](const std::vector<double>& v) {
        const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        double s = 0;
        for (double x : v) s += (x - m) * (x - m);
        return s / v.size();
    };
    CHECK(var(bl.paths.column(0)) == doctest::Approx(1.0).epsilon(0.05));
    CHECK(var(bl.paths.column(1)) == doctest::Approx(16.0).epsilon(0.05));
    CHECK(parse_bootstrap_mode("none") == BootstrapMode::rows);
}

TEST_CASE("synthetic AR(1) series") {
    auto lag1 = [](const std::vector<double>& y) {
        const double n = static_cast<double>(y.size());
        const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
        double num = 0, den = 0;
        for (std::size_t t = 0; t < y.size(); ++t) {
            den += (y[t] - mean) * (y[t] - mean);
            if (t > 0) num += (y[t] - mean) * (y[t - 1] - mean);
        }
        return num / den;
    };
    const auto y = simulate_ar1(0.8, 10000, 3).values;
    CHECK(std::abs(lag1(y) - 0.8) < 0.02);
    const auto w = simulate_ar1(0.0, 10000, 3).values;
    CHECK(std::abs(lag1(w)) < 0.03);
    double ss = 0;
    for (double v : w) ss += v * v;
    CHECK(std::abs(ss / 10000 - 1.0) < 0.05);
    CHECK(simulate_ar1(0.5, 100, 4).values == simulate_ar1(0.5, 100, 4).values);
    CHECK_THROWS_AS(simulate_ar1(1.0, 10, 1), InvalidInput);
}
