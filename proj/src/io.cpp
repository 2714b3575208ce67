#include "fforms/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fforms/errors.hpp"

namespace fforms::io {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const Json& field(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object()) throw InvalidInput(where + ": expected a JSON object");
    auto it = j.find(key);
    if (it == j.end()) throw InvalidInput(where + ": missing key \"" + key + "\"");
    return *it;
}

double number(const Json& j, const std::string& where) {
    if (!j.is_number()) throw InvalidInput(where + ": expected a number");
    return j.get<double>();
}

std::int64_t integer(const Json& j, const std::string& where) {
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number_float()) {
        const double v = j.get<double>();
        if (std::floor(v) == v && std::abs(v) < 9e15) return static_cast<std::int64_t>(v);
    }
    throw InvalidInput(where + ": expected an integer");
}

std::vector<double> numbers(const Json& j, const std::string& where) {
    if (!j.is_array()) throw InvalidInput(where + ": expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

Matrix matrix(const Json& j, const std::string& where) {
    if (!j.is_array()) throw InvalidInput(where + ": expected an array of rows");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < j.size(); ++i) rows.push_back(numbers(j[i], where + "[" + std::to_string(i) + "]"));
    return Matrix::from_rows(rows);
}

Json matrix_json(const Matrix& m) {
    Json rows = Json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return rows;
}

Json gpd_json(const Gpd& g) { return Json{{"xi", g.xi}, {"beta", g.beta}, {"attach_prob", g.attach_prob}}; }

Gpd gpd_from(const Json& j, const std::string& where) {
    return Gpd{number(field(j, "xi", where), where + ".xi"), number(field(j, "beta", where), where + ".beta"),
               number(field(j, "attach_prob", where), where + ".attach_prob")};
}

Json interpolant_json(const EmpiricalInterpolant& e) {
    Json pts = Json::array();
    for (const auto& b : e.points) pts.push_back(Json::array({b.prob, b.value}));
    return Json{{"breakpoints", pts}};
}

EmpiricalInterpolant interpolant_from(const Json& j, const std::string& where) {
    const auto& pts = field(j, "breakpoints", where);
    if (!pts.is_array()) throw InvalidInput(where + ".breakpoints: expected an array of [prob, value] pairs");
    EmpiricalInterpolant e;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto v = numbers(pts[i], where + ".breakpoints[" + std::to_string(i) + "]");
        if (v.size() != 2) throw InvalidInput(where + ".breakpoints[" + std::to_string(i) + "]: expected [prob, value]");
        e.points.push_back({v[0], v[1]});
    }
    return e;
}

Json meta_json(std::string_view type, const HorizonMeta& m) {
    Json j{{"type", type}, {"origin", m.origin}, {"horizon", m.horizon}};
    if (!m.step_labels.empty()) j["step_labels"] = m.step_labels;
    return j;
}

template <class T>
Json optional_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

Json distribution_json(const EmpiricalDistribution& d) {
    return Json{{"values", d.values()}, {"weights", d.weights()}};
}

}  // namespace

// ---- forecast documents ---------------------------------------------------------------

Json to_json(const FamilyParams& params) {
    return std::visit(overloaded{[](const Gaussian& g) { return Json{{"mu", g.mu}, {"sigma", g.sigma}}; },
                                 [](const StudentT& t) { return Json{{"mu", t.mu}, {"sigma", t.sigma}, {"nu", t.nu}}; },
                                 [](const EmpiricalInterpolant& e) { return interpolant_json(e); },
                                 [](const SplicedGpdTails& s) {
                                     Json j{{"body", interpolant_json(s.body)}};
                                     if (s.lower) j["lower"] = gpd_json(*s.lower);
                                     if (s.upper) j["upper"] = gpd_json(*s.upper);
                                     return j;
                                 }},
                      params);
}

FamilyParams params_from_json(const Json& j, Family family) {
    const std::string where = "params";
    switch (family) {
        case Family::gaussian:
            return Gaussian{number(field(j, "mu", where), "mu"), number(field(j, "sigma", where), "sigma")};
        case Family::student_t:
            return StudentT{number(field(j, "mu", where), "mu"), number(field(j, "sigma", where), "sigma"),
                            number(field(j, "nu", where), "nu")};
        case Family::empirical:
            return interpolant_from(j, where);
        case Family::spliced_gpd: {
            SplicedGpdTails s{interpolant_from(field(j, "body", where), "body"), std::nullopt, std::nullopt};
            if (j.contains("lower") && !j["lower"].is_null()) s.lower = gpd_from(j["lower"], "lower");
            if (j.contains("upper") && !j["upper"].is_null()) s.upper = gpd_from(j["upper"], "upper");
            return s;
        }
    }
    throw InvalidInput("unknown family");
}

Json to_json(const ForecastDocument& doc) {
    return std::visit(overloaded{[](const PointForecast& f) {
                                     Json j = meta_json("point", f.meta);
                                     j["values"] = f.values;
                                     return j;
                                 },
                                 [](const QuantileForecast& f) {
                                     Json j = meta_json("quantile", f.meta);
                                     j["levels"] = f.levels;
                                     j["values"] = matrix_json(f.values);
                                     return j;
                                 },
                                 [](const ParametricForecast& f) {
                                     Json j = meta_json("parametric", f.meta);
                                     j["family"] = family_name(f.family);
                                     Json ps = Json::array();
                                     for (const auto& p : f.params) ps.push_back(to_json(p));
                                     j["params"] = ps;
                                     return j;
                                 },
                                 [](const TrajectoryEnsemble& f) {
                                     Json j = meta_json("trajectory", f.meta);
                                     j["paths"] = matrix_json(f.paths);
                                     if (!f.weights.empty()) j["weights"] = f.weights;
                                     return j;
                                 }},
                      doc);
}

ForecastDocument forecast_from_json(const Json& j) {
    const std::string where = "forecast";
    const auto& type = field(j, "type", where);
    if (!type.is_string()) throw InvalidInput("forecast.type: expected a string");
    const ForecastKind kind = parse_kind(type.get<std::string>());
    HorizonMeta meta;
    meta.origin = integer(field(j, "origin", where), "origin");
    const auto h = integer(field(j, "horizon", where), "horizon");
    if (h < 1) throw InvalidInput("horizon must be >= 1");
    meta.horizon = static_cast<std::size_t>(h);
    if (j.contains("step_labels") && !j["step_labels"].is_null()) {
        const auto& labels = j["step_labels"];
        if (!labels.is_array()) throw InvalidInput("step_labels: expected an array of strings");
        for (const auto& l : labels) {
            if (!l.is_string()) throw InvalidInput("step_labels: expected an array of strings");
            meta.step_labels.push_back(l.get<std::string>());
        }
    }
    switch (kind) {
        case ForecastKind::point:
            return PointForecast{meta, numbers(field(j, "values", where), "values")};
        case ForecastKind::quantile: {
            QuantileForecast f{meta, numbers(field(j, "levels", where), "levels"), {}};
            f.values = matrix(field(j, "values", where), "values");
            return f;
        }
        case ForecastKind::parametric: {
            const auto& fam = field(j, "family", where);
            if (!fam.is_string()) throw InvalidInput("family: expected a string");
            ParametricForecast f{meta, parse_family(fam.get<std::string>()), {}};
            const auto& ps = field(j, "params", where);
            if (!ps.is_array()) throw InvalidInput("params: expected an array of records");
            for (const auto& p : ps) f.params.push_back(params_from_json(p, f.family));
            return f;
        }
        case ForecastKind::trajectory: {
            TrajectoryEnsemble f{meta, matrix(field(j, "paths", where), "paths"), {}};
            if (j.contains("weights") && !j["weights"].is_null()) f.weights = numbers(j["weights"], "weights");
            return f;
        }
    }
    throw InvalidInput("unknown forecast type");
}

Json to_json(const CalibrationSet& cal) {
    Json records = Json::array();
    for (const auto& r : cal.records) records.push_back(Json{{"forecast", to_json(r.forecast)}, {"realization", r.realization}});
    return Json{{"records", records}};
}

CalibrationSet calibration_from_json(const Json& j) {
    const auto& records = field(j, "records", "calibration");
    if (!records.is_array()) throw InvalidInput("calibration.records: expected an array");
    CalibrationSet cal;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::string where = "records[" + std::to_string(i) + "]";
        cal.records.push_back({forecast_from_json(field(records[i], "forecast", where)),
                               numbers(field(records[i], "realization", where), where + ".realization")});
    }
    return cal;
}

Json to_json(const CopulaSpec& spec) {
    Json j{{"copula", copula_name(spec)}};
    std::visit(overloaded{[&](const copula::GaussianAr1& c) { j["rho"] = c.rho; },
                          [&](const copula::GaussianFull& c) { j["correlation"] = matrix_json(c.correlation); },
                          [&](const copula::StudentT& c) {
                              j["correlation"] = matrix_json(c.correlation);
                              j["nu"] = c.nu;
                          },
                          [&](const copula::Ecc& c) {
                              j["variant"] = c.variant == copula::EccVariant::q ? "q" : "r";
                              j["reference"] = to_json(ForecastDocument{c.reference});
                          },
                          [](const auto&) {}},
               spec);
    return j;
}

CopulaSpec copula_from_json(const Json& j) {
    const std::string where = "copula";
    const auto& name_json = field(j, "copula", where);
    if (!name_json.is_string()) throw InvalidInput("copula: expected a name string");
    const auto name = name_json.get<std::string>();
    if (name == "independence") return copula::Independence{};
    if (name == "comonotonic") return copula::Comonotonic{};
    if (name == "countermonotonic") return copula::Countermonotonic{};
    if (name == "gaussian_ar1") return copula::GaussianAr1{number(field(j, "rho", where), "rho")};
    if (name == "gaussian_full" || name == "gaussian") {
        return copula::GaussianFull{matrix(field(j, "correlation", where), "correlation")};
    }
    if (name == "student_t") {
        return copula::StudentT{matrix(field(j, "correlation", where), "correlation"), number(field(j, "nu", where), "nu")};
    }
    if (name == "ecc") {
        copula::Ecc e;
        auto ref = forecast_from_json(field(j, "reference", where));
        if (!std::holds_alternative<TrajectoryEnsemble>(ref)) throw InvalidInput("ecc reference must be a trajectory");
        e.reference = std::get<TrajectoryEnsemble>(std::move(ref));
        const std::string variant = j.value("variant", std::string("r"));
        if (variant == "q") {
            e.variant = copula::EccVariant::q;
        } else if (variant == "r") {
            e.variant = copula::EccVariant::r;
        } else {
            throw InvalidInput("ecc variant must be \"q\" or \"r\"");
        }
        return e;
    }
    throw InvalidInput("unknown copula '" + name + "'");
}

Json to_json(const DiscreteJoint& joint) {
    return Json{{"version", 1}, {"support", joint.support}, {"prob", joint.prob}};
}

DiscreteJoint joint_from_json(const Json& j) {
    const std::string where = "joint";
    if (j.contains("version") && integer(j["version"], "version") != 1) {
        throw InvalidInput("unsupported discrete joint version");
    }
    DiscreteJoint out;
    const auto& support = field(j, "support", where);
    if (!support.is_array()) throw InvalidInput("support: expected an array per step");
    for (std::size_t k = 0; k < support.size(); ++k) {
        out.support.push_back(numbers(support[k], "support[" + std::to_string(k) + "]"));
    }
    out.prob = numbers(field(j, "prob", where), "prob");
    validate_joint(out);
    return out;
}

// ---- results ------------------------------------------------------------------------------------

Json to_json(const Provenance& p) {
    Json j{{"source_type", p.source_type}};
    j["copula"] = optional_json(p.copula);
    j["tail_model"] = optional_json(p.tail_model);
    j["approximations"] = p.approximations;
    j["paths"] = optional_json(p.paths);
    j["seed"] = optional_json(p.seed);
    j["notes"] = p.notes;
    return j;
}

Json to_json(const IntervalSet& s) { return Json{{"lower", s.lower}, {"upper", s.upper}}; }

Json to_json(const PathwiseBand& b) {
    return Json{{"center", b.center}, {"scale", b.scale}, {"multiplier", b.multiplier}, {"lower", b.lower}, {"upper", b.upper}};
}

Json to_json(const IntervalResult& r) {
    return Json{{"result", "intervals"}, {"intervals", to_json(r.intervals)}, {"provenance", to_json(r.provenance)}};
}

Json to_json(const BandResult& r) {
    return Json{{"result", "band"},
                {"band", to_json(r.band)},
                {"per_step_alpha", optional_json(r.per_step_alpha)},
                {"provenance", to_json(r.provenance)}};
}

Json to_json(const EventResult& r) {
    return Json{{"result", "event"},
                {"probability", r.probability},
                {"standard_error", r.standard_error},
                {"provenance", to_json(r.provenance)}};
}

Json to_json(const VarResult& r) {
    return Json{{"result", "var"}, {"alpha", r.alpha}, {"value_at_risk", r.value_at_risk}, {"provenance", to_json(r.provenance)}};
}

Json to_json(const SurvivalResult& r) {
    return Json{{"result", "survival"},
                {"survival", r.curve.survival},
                {"censored_mass", r.curve.censored_mass},
                {"hazard", hazard_from_survival(r.curve)},
                {"hitting_mass", r.hitting_mass},
                {"standard_error", r.standard_error},
                {"independence_approximation", r.independence_approximation},
                {"provenance", to_json(r.provenance)}};
}

Json to_json(const AggregateResult& r) {
    Json j{{"result", "aggregate"}, {"mean", r.mean}, {"standard_error", optional_json(r.standard_error)}};
    j["distribution"] = r.distribution ? distribution_json(*r.distribution) : Json(nullptr);
    j["closed_form"] = r.closed_form ? Json{{"mu", r.closed_form->mu}, {"sigma", r.closed_form->sigma}} : Json(nullptr);
    j["provenance"] = to_json(r.provenance);
    return j;
}

Json to_json(const ScenarioFunctionals& r) {
    Json recs = Json::array();
    for (const auto& s : r.records) {
        recs.push_back(Json{{"peak", s.peak}, {"exceedances", s.exceedances}, {"cumulative", s.cumulative}});
    }
    return Json{{"result", "scenario"},
                {"records", recs},
                {"peak", distribution_json(r.peak)},
                {"exceedance", distribution_json(r.exceedance)},
                {"cumulative", distribution_json(r.cumulative)},
                {"provenance", to_json(r.provenance)}};
}

Json to_json(const ScenarioRanking& r) {
    Json ranked = Json::array();
    for (const auto& s : r.ranked) {
        ranked.push_back(Json{{"index", s.index}, {"weight", s.weight}, {"loss", s.loss}, {"score", s.score}});
    }
    Json clusters = Json::array();
    for (const auto& c : r.clusters) {
        clusters.push_back(Json{{"medoid", c.medoid},
                                {"members", c.members},
                                {"weight", c.weight},
                                {"mean_loss", c.mean_loss},
                                {"loss_q95", c.loss_q95}});
    }
    return Json{{"result", "scenario_ranking"},
                {"ranked", ranked},
                {"clusters", clusters},
                {"exceedance", Json{{"x", r.exceedance.x}, {"probability", r.exceedance.probability}}},
                {"provenance", to_json(r.provenance)}};
}

Json to_json(const ReliabilityTable& t) {
    Json bins = Json::array();
    for (const auto& b : t.bins) {
        bins.push_back(Json{{"lower", b.lower},
                            {"upper", b.upper},
                            {"count", b.count},
                            {"mean_prediction", optional_json(b.mean_prediction)},
                            {"frequency", optional_json(b.frequency)}});
    }
    return bins;
}

// ---- files ---------------------------------------------------------------------------------------

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << text;
    if (!out) throw InvalidInput("write failed for " + path.string());
}

Json read_json(const std::filesystem::path& path) {
    const auto text = read_text(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput(path.string() + ": malformed JSON: " + e.what());
    }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

ForecastDocument load_forecast(const std::filesystem::path& path) {
    auto doc = forecast_from_json(read_json(path));
    require_valid(doc);
    return doc;
}

CalibrationSet load_calibration(const std::filesystem::path& path) {
    auto cal = calibration_from_json(read_json(path));
    require_valid(cal);
    return cal;
}

DiscreteJoint load_joint(const std::filesystem::path& path) { return joint_from_json(read_json(path)); }

namespace {

std::vector<std::vector<std::string>> csv_rows(const std::string& text, const std::vector<std::string>& header) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<std::string>> rows;
    bool seen_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (!seen_header) {
            if (cells != header) {
                std::string want;
                for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
                throw InvalidInput("CSV header must be '" + want + "'");
            }
            seen_header = true;
            continue;
        }
        if (cells.size() != header.size()) {
            throw InvalidInput("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                               " fields");
        }
        rows.push_back(std::move(cells));
    }
    if (!seen_header) throw InvalidInput("CSV is empty");
    return rows;
}

double parse_double(const std::string& s, const char* what) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    while (begin < end && *begin == ' ') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) throw InvalidInput(std::string("CSV: bad ") + what + " '" + s + "'");
    return v;
}

}  // namespace

HistorySeries history_from_csv(const std::string& text) {
    std::vector<std::pair<double, double>> rows;
    for (const auto& r : csv_rows(text, {"t", "value"})) rows.push_back({parse_double(r[0], "t"), parse_double(r[1], "value")});
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    HistorySeries h;
    for (const auto& [t, v] : rows) h.values.push_back(v);
    const auto violations = validate(h);
    if (!violations.empty()) throw InvalidInput("invalid history: " + violations.front().message);
    return h;
}

std::string history_to_csv(const HistorySeries& h) {
    std::string out = "t,value\n";
    for (std::size_t t = 0; t < h.values.size(); ++t) out += std::to_string(t + 1) + "," + format_number(h.values[t]) + "\n";
    return out;
}

std::vector<ActualsWindow> actuals_from_csv(const std::string& text) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<double, double>>> by_id;
    for (const auto& r : csv_rows(text, {"window_id", "t", "value"})) {
        if (!by_id.count(r[0])) order.push_back(r[0]);
        by_id[r[0]].push_back({parse_double(r[1], "t"), parse_double(r[2], "value")});
    }
    std::vector<ActualsWindow> out;
    for (const auto& id : order) {
        auto rows = by_id[id];
        std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        ActualsWindow w{id, {}};
        for (const auto& [t, v] : rows) {
            if (!std::isfinite(v)) throw InvalidInput("non-finite actual in window " + id);
            w.values.push_back(v);
        }
        out.push_back(std::move(w));
    }
    return out;
}

std::string actuals_to_csv(const std::vector<ActualsWindow>& windows) {
    std::string out = "window_id,t,value\n";
    for (const auto& w : windows) {
        for (std::size_t k = 0; k < w.values.size(); ++k) {
            out += w.id + "," + std::to_string(k + 1) + "," + format_number(w.values[k]) + "\n";
        }
    }
    return out;
}

std::string format_number(double x) { return Json(x).dump(); }

namespace {

void flatten(const Json& j, const std::string& key, std::string& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) flatten(v, key.empty() ? k : key + "." + k, out);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], key + "." + std::to_string(i), out);
    } else {
        std::string v = j.is_string() ? j.get<std::string>() : j.is_null() ? std::string() : j.dump();
        if (v.find_first_of(",\"\n") != std::string::npos) {
            std::string q = "\"";
            for (char c : v) q += c == '"' ? std::string("\"\"") : std::string(1, c);
            v = q + "\"";
        }
        out += key + "," + v + "\n";
    }
}

}  // namespace

std::string flatten_csv(const Json& j) {
    std::string out = "key,value\n";
    flatten(j, "", out);
    return out;
}

}  // namespace fforms::io
