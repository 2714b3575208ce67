#include "doctest.h"

#include <filesystem>

#include "fforms/errors.hpp"
#include "fforms/convert.hpp"
#include "fforms/io.hpp"
#include "fforms/rng.hpp"

using namespace fforms;
using io::Json;

namespace {

std::vector<ForecastDocument> documents() {
    Rng rng(8, 0);
    auto r = [&] { return rng.normal() * 3.3; };
    std::vector<ForecastDocument> docs;
    docs.push_back(PointForecast{{4, 3, {"a", "b", "c"}}, {r(), r(), 1e-300}});
    QuantileForecast q{{-2, 2, {}}, {0.1, 0.5, 0.9}, Matrix(2, 3)};
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t l = 0; l < 3; ++l) q.values(k, l) = l + 0.1 * r();
    docs.push_back(q);
    docs.push_back(ParametricForecast{{0, 2, {}}, Family::gaussian, {Gaussian{r(), 1.5}, Gaussian{0.1, 2.0 / 3}}});
    docs.push_back(ParametricForecast{{0, 1, {}}, Family::student_t, {StudentT{0.3, 1.1, 4.5}}});
    docs.push_back(ParametricForecast{{0, 1, {}}, Family::empirical, {EmpiricalInterpolant{{{0.0, -1}, {0.5, 0.1}, {1.0, 2}}}}});
    docs.push_back(ParametricForecast{
        {0, 1, {}},
        Family::spliced_gpd,
        {SplicedGpdTails{{{{0.05, -1.6}, {0.95, 1.7}}}, Gpd{0.1, 0.5, 0.05}, std::nullopt}}});
    TrajectoryEnsemble e{{7, 2, {}}, Matrix(4, 2), {}};
    for (std::size_t m = 0; m < 4; ++m)
        for (std::size_t k = 0; k < 2; ++k) e.paths(m, k) = r();
    docs.push_back(e);
    e.weights = {0.1, 0.2, 0.3, 0.4};
    docs.push_back(e);
    return docs;
}

}  // namespace

TEST_CASE("forecast documents round-trip exactly") {
    for (const auto& d : documents()) {
        const auto j = io::to_json(d);
        CHECK(io::forecast_from_json(j) == d);
        // Through text as well.
        CHECK(io::forecast_from_json(Json::parse(io::dump(j))) == d);
        CHECK(io::dump(io::to_json(io::forecast_from_json(j))) == io::dump(j));
    }
}

TEST_CASE("calibration, copula and joint documents round-trip") {
    CalibrationSet cal;
    cal.records.push_back({PointForecast{{0, 2, {}}, {1, 2}}, {1.5, 2.5}});
    cal.records.push_back({documents()[2], {0.0, -1.0}});
    const auto cj = io::to_json(cal);
    const auto back = io::calibration_from_json(Json::parse(io::dump(cj)));
    REQUIRE(back.records.size() == 2);
    CHECK(back.records[1].forecast == cal.records[1].forecast);
    CHECK(back.records[0].realization == cal.records[0].realization);

    TrajectoryEnsemble ref{{0, 2, {}}, Matrix::from_rows({{0, 1}, {2, 3}}), {}};
    Matrix corr = Matrix::from_rows({{1, 0.5}, {0.5, 1}});
    const std::vector<CopulaSpec> specs{copula::Independence{}, copula::Comonotonic{}, copula::Countermonotonic{},
                                        copula::GaussianAr1{0.7}, copula::GaussianFull{corr},
                                        copula::StudentT{corr, 5}, copula::Ecc{ref, copula::EccVariant::q}};
    for (const auto& s : specs) {
        const auto j = io::to_json(s);
        const auto b = io::copula_from_json(j);
        CHECK(b.index() == s.index());
        CHECK(io::to_json(b) == j);
    }
    CHECK(std::holds_alternative<copula::GaussianFull>(
        io::copula_from_json(Json::parse(R"({"copula": "gaussian", "correlation": [[1, 0], [0, 1]]})"))));
    CHECK_THROWS_AS(io::copula_from_json(Json::parse(R"({"copula": "clayton"})")), InvalidInput);

    const DiscreteJoint dj{{{0, 1}, {-1, 2.5}}, {0.1, 0.2, 0.3, 0.4}};
    CHECK(io::joint_from_json(io::to_json(dj)) == dj);
    CHECK_THROWS_AS(io::joint_from_json(Json::parse(R"({"version": 1, "support": [[0, 1]], "prob": [0.5, 0.4]})")),
                    InvalidInput);
    CHECK_THROWS_AS(io::joint_from_json(Json::parse(R"({"version": 2, "support": [[0]], "prob": [1]})")),
                    InvalidInput);
}

TEST_CASE("malformed documents") {
    CHECK_THROWS_AS(io::forecast_from_json(Json::parse(R"({"type": "banana", "horizon": 1})")), InvalidInput);
    CHECK_THROWS_AS(io::forecast_from_json(Json::parse(R"({"type": "point"})")), InvalidInput);
    CHECK_THROWS_AS(io::forecast_from_json(Json::parse(R"({"type": "point", "horizon": 2, "values": "x"})")),
                    InvalidInput);
    CHECK_THROWS_AS(
        io::forecast_from_json(Json::parse(R"({"type": "trajectory", "horizon": 2, "paths": [[1, 2], [3]]})")),
        InvalidInput);
    // Structurally fine but invalid: parse succeeds, validation reports.
    const auto doc = io::forecast_from_json(
        Json::parse(R"({"type": "quantile", "origin": 0, "horizon": 1, "levels": [0.1, 0.9], "values": [[2.0, 1.0]]})"));
    CHECK_FALSE(validate(doc).empty());
    CHECK_THROWS_AS(io::load_forecast("does/not/exist.json"), InvalidInput);
}

TEST_CASE("CSV history and actuals") {
    const auto h = io::history_from_csv("t,value\n0,1.5\n1,-2\n2,3e-3\n");
    CHECK(h.values == std::vector<double>{1.5, -2, 3e-3});
    CHECK(io::history_from_csv(io::history_to_csv(h)).values == h.values);
    CHECK_THROWS_AS(io::history_from_csv("t,value\n0,abc\n"), InvalidInput);
    CHECK_THROWS_AS(io::history_from_csv("time,v\n0,1\n"), InvalidInput);

    const auto a = io::actuals_from_csv("window_id,t,value\nw2,2,4\nw2,1,3\nw1,1,0.5\nw1,2,0.25\n");
    REQUIRE(a.size() == 2);
    CHECK(a[0].id == "w2");
    CHECK(a[0].values == std::vector<double>{3, 4});
    CHECK(a[1].values == std::vector<double>{0.5, 0.25});
    const auto again = io::actuals_from_csv(io::actuals_to_csv(a));
    CHECK(again[1].id == "w1");
    CHECK(again[1].values == a[1].values);
}

TEST_CASE("bundled sample files load") {
    for (const auto* f : {"data/sample/point.json", "data/sample/quantile.json", "data/sample/parametric.json",
                          "data/sample/trajectory.json", "data/sample/var_paths.json"})
        CHECK_NOTHROW(io::load_forecast(f));
    CHECK(io::load_calibration("data/sample/calibration.json").records.size() == 200);
    CHECK(io::format_number(0.1) == "0.1");
    CHECK(io::format_number(2.0) == "2.0");
}

TEST_CASE("converted documents survive a trip through a file") {
    const auto ens = std::get<TrajectoryEnsemble>(io::load_forecast("data/sample/trajectory.json"));
    const std::vector<double> levels{0.1, 0.5, 0.9};
    const auto q = traj_to_quantile(ens, levels);
    const auto path = std::filesystem::temp_directory_path() / "fforms_io_roundtrip.json";
    io::write_text(path, io::dump(io::to_json(ForecastDocument{q})));
    CHECK(io::load_forecast(path) == ForecastDocument{q});
    std::filesystem::remove(path);
}

TEST_CASE("flattened CSV") {
    const auto j = Json::parse(R"({"a": 1, "b": {"c": [0.5, "x,y"]}, "d": null})");
    CHECK(io::flatten_csv(j) == "key,value\na,1\nb.c.0,0.5\nb.c.1,\"x,y\"\nd,\n");
}
