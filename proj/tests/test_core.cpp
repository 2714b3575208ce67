#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "fforms/core.hpp"
#include "fforms/errors.hpp"

using namespace fforms;

namespace {

QuantileForecast make_quantile(std::vector<double> levels, std::vector<std::vector<double>> rows) {
    QuantileForecast q;
    q.meta.horizon = rows.size();
    q.levels = std::move(levels);
    q.values = Matrix::from_rows(rows);
    return q;
}

bool has_message(const std::vector<Violation>& v, const std::string& text) {
    return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.message == text; });
}

}  // namespace

TEST_CASE("validate reports level ordering and crossing") {
    auto bad_levels = make_quantile({0.5, 0.1}, {{1.0, 2.0}});
    CHECK(has_message(validate(ForecastDocument{bad_levels}), "levels not ascending at index 1"));

    auto crossing = make_quantile({0.1, 0.9}, {{2.0, 1.0}});
    CHECK(has_message(validate(ForecastDocument{crossing}), "quantile crossing at step 0"));

    TrajectoryEnsemble ens;
    ens.meta.horizon = 2;
    ens.paths = Matrix::from_rows({{0, 1}, {1, 2}, {2, 3}});
    CHECK(validate(ForecastDocument{ens}).empty());
}

TEST_CASE("validate rejects non-finite values, bad weights and degenerate sigma") {
    PointForecast p{{0, 2, {}}, {1.0, NAN}};
    CHECK_FALSE(validate(ForecastDocument{p}).empty());

    TrajectoryEnsemble ens{{0, 1, {}}, Matrix::from_rows({{0}, {1}}), {0.5, 0.6}};
    CHECK_FALSE(validate(ForecastDocument{ens}).empty());
    ens.weights = {0.25, 0.75};
    CHECK(validate(ForecastDocument{ens}).empty());

    ParametricForecast f{{0, 1, {}}, Family::gaussian, {Gaussian{0, 0}}};
    CHECK_FALSE(validate(ForecastDocument{f}).empty());
    CHECK_THROWS_AS(require_valid(ForecastDocument{f}), InvalidInput);

    PointForecast wrong_h{{0, 3, {}}, {1.0, 2.0}};
    CHECK_FALSE(validate(ForecastDocument{wrong_h}).empty());
}

TEST_CASE("ragged matrices are refused") {
    CHECK_THROWS_AS(Matrix::from_rows({{1, 2}, {3}}), InvalidInput);
}

TEST_CASE("rearrange_monotone sorts, keeps ties and is idempotent") {
    CHECK(rearrange_monotone(std::vector<double>{3, 1, 2}) == std::vector<double>{1, 2, 3});
    CHECK(rearrange_monotone(std::vector<double>{1, 2, 3}) == std::vector<double>{1, 2, 3});
    CHECK(rearrange_monotone(std::vector<double>{5, 5, 1}) == std::vector<double>{1, 5, 5});
    CHECK_THROWS_AS(rearrange_monotone(std::vector<double>{1, INFINITY}), InvalidInput);

    std::mt19937_64 gen(5);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 200; ++t) {
        std::vector<double> v(1 + t % 17);
        for (auto& x : v) x = std::round(nd(gen) * 3);  // rounding creates ties
        const auto once = rearrange_monotone(v);
        CHECK(rearrange_monotone(once) == once);
        auto sorted = v;
        std::sort(sorted.begin(), sorted.end());
        CHECK(once == sorted);
    }
}

TEST_CASE("empirical distribution quantiles are inf-based") {
    const std::vector<double> v{4, 1, 3, 2};
    EmpiricalDistribution d(v);
    CHECK(d.quantile(0.5) == 2.0);
    CHECK(d.quantile(0.25) == 1.0);
    CHECK(d.quantile(0.26) == 2.0);
    CHECK(d.quantile(1.0) == 4.0);
    CHECK(d.cdf(2.0) == doctest::Approx(0.5));
    CHECK(d.cdf_left(2.0) == doctest::Approx(0.25));
    CHECK(d.mean() == doctest::Approx(2.5));

    const std::vector<double> two{0, 2};
    CHECK(EmpiricalDistribution(two).midpoint_median() == 1.0);
    const std::vector<double> three{0, 1, 10};
    CHECK(EmpiricalDistribution(three).midpoint_median() == 1.0);

    const std::vector<double> vals{0, 1};
    const std::vector<double> w{0.9, 0.1};
    EmpiricalDistribution wd(vals, w);
    CHECK(wd.quantile(0.9) == 0.0);
    CHECK(wd.quantile(0.91) == 1.0);
    CHECK(wd.mean() == doctest::Approx(0.1));
}

TEST_CASE("calibration sets require matching realization lengths") {
    CalibrationSet cal;
    cal.records.push_back({PointForecast{{0, 2, {}}, {1, 2}}, {1.0}});
    CHECK_FALSE(validate(cal).empty());
    cal.records[0].realization = {1.0, 2.0};
    CHECK(validate(cal).empty());
}

TEST_CASE("pathwise band containment") {
    PathwiseBand b{{0, 0}, {1, 2}, 1.5, {-1.5, -3}, {1.5, 3}};
    const std::vector<double> in{1.5, -3.0};
    const std::vector<double> out{1.6, 0.0};
    CHECK(b.contains(in));
    CHECK_FALSE(b.contains(out));
}
