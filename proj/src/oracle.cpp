#include "fforms/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fforms/errors.hpp"
#include "fforms/rng.hpp"

namespace fforms {

std::vector<double> DiscreteJoint::path(std::size_t atom) const {
    std::vector<double> out(support.size());
    for (std::size_t k = support.size(); k-- > 0;) {
        const std::size_t n = support[k].size();
        out[k] = support[k][atom % n];
        atom /= n;
    }
    return out;
}

void validate_joint(const DiscreteJoint& j) {
    const std::size_t h = j.horizon();
    if (h < 1) throw InvalidInput("discrete joint needs horizon >= 1");
    if (h > kOracleMaxHorizon) throw InvalidInput("discrete joint horizon " + std::to_string(h) + " exceeds the cap of 4");
    std::size_t atoms = 1;
    for (std::size_t k = 0; k < h; ++k) {
        const auto& s = j.support[k];
        if (s.empty()) throw InvalidInput("empty support at step " + std::to_string(k));
        if (s.size() > kOracleMaxSupport) {
            throw InvalidInput("support at step " + std::to_string(k) + " exceeds the cap of 8 values");
        }
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!std::isfinite(s[i])) throw InvalidInput("non-finite support value at step " + std::to_string(k));
            if (i > 0 && !(s[i] > s[i - 1])) {
                throw InvalidInput("support not strictly ascending at step " + std::to_string(k));
            }
        }
        atoms *= s.size();
    }
    if (j.prob.size() != atoms) {
        throw InvalidInput("prob has " + std::to_string(j.prob.size()) + " entries; the support grid has " +
                           std::to_string(atoms));
    }
    double total = 0.0;
    for (std::size_t a = 0; a < atoms; ++a) {
        if (!(j.prob[a] >= 0.0) || !std::isfinite(j.prob[a])) {
            throw InvalidInput("negative or non-finite probability at atom " + std::to_string(a));
        }
        total += j.prob[a];
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidInput("joint probabilities do not sum to 1");
}

DiscreteJoint independent_joint(const std::vector<std::vector<std::pair<double, double>>>& marginals) {
    DiscreteJoint j;
    j.prob = {1.0};
    for (const auto& m : marginals) {
        std::vector<double> values;
        std::vector<double> next;
        for (const auto& [v, p] : m) values.push_back(v);
        for (double base : j.prob) {
            for (const auto& [v, p] : m) next.push_back(base * p);
        }
        j.support.push_back(std::move(values));
        j.prob = std::move(next);
    }
    validate_joint(j);
    return j;
}

std::vector<std::pair<double, double>> marginalize(const DiscreteJoint& j, std::size_t step) {
    validate_joint(j);
    if (step >= j.horizon()) throw InvalidInput("marginal step outside the horizon");
    std::size_t stride = 1;
    for (std::size_t k = step + 1; k < j.horizon(); ++k) stride *= j.support[k].size();
    const std::size_t n = j.support[step].size();
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({j.support[step][i], 0.0});
    for (std::size_t a = 0; a < j.atoms(); ++a) out[(a / stride) % n].second += j.prob[a];
    return out;
}

double enumerate_event_probability(const DiscreteJoint& j, const EventSpec& e) {
    validate_joint(j);
    validate_event(e, j.horizon());
    double p = 0.0;
    for (std::size_t a = 0; a < j.atoms(); ++a) {
        if (j.prob[a] > 0.0 && event_holds(j.path(a), e)) p += j.prob[a];
    }
    return p;
}

SurvivalResult exact_survival(const DiscreteJoint& j, double threshold, Comparator c) {
    validate_joint(j);
    const std::size_t h = j.horizon();
    SurvivalResult out;
    out.hitting_mass.assign(h, 0.0);
    double censored = 0.0;
    for (std::size_t a = 0; a < j.atoms(); ++a) {
        const auto path = j.path(a);
        std::size_t k = 0;
        while (k < h && !compare(path[k], c, threshold)) ++k;
        (k < h ? out.hitting_mass[k] : censored) += j.prob[a];
    }
    // S(k) as the mass of paths that have not crossed by k, summed directly.
    out.curve.survival.assign(h, 0.0);
    for (std::size_t k = 0; k < h; ++k) {
        double s = censored;
        for (std::size_t i = k + 1; i < h; ++i) s += out.hitting_mass[i];
        out.curve.survival[k] = s;
    }
    out.curve.censored_mass = censored;
    out.provenance.source_type = "discrete_joint";
    out.provenance.notes.push_back("exact enumeration");
    return out;
}

std::vector<std::pair<double, double>> exact_aggregate(const DiscreteJoint& j, std::span<const std::size_t> window) {
    validate_joint(j);
    if (window.empty()) throw InvalidInput("aggregate window is empty");
    for (auto k : window) {
        if (k >= j.horizon()) throw InvalidInput("aggregate window step outside the horizon");
    }
    std::vector<std::pair<double, double>> atoms;
    for (std::size_t a = 0; a < j.atoms(); ++a) {
        if (j.prob[a] == 0.0) continue;
        const auto path = j.path(a);
        double z = 0.0;
        for (auto k : window) z += path[k];
        atoms.push_back({z, j.prob[a]});
    }
    std::sort(atoms.begin(), atoms.end());
    std::vector<std::pair<double, double>> out;
    for (const auto& [z, p] : atoms) {
        if (!out.empty() && std::abs(z - out.back().first) <= 1e-9) {
            out.back().second += p;
        } else {
            out.push_back({z, p});
        }
    }
    return out;
}

TrajectoryEnsemble sample(const DiscreteJoint& j, std::size_t paths, std::uint64_t seed) {
    validate_joint(j);
    if (paths < 1) throw InvalidInput("sample needs at least one path");
    std::vector<double> cumulative(j.atoms());
    double acc = 0.0;
    for (std::size_t a = 0; a < j.atoms(); ++a) cumulative[a] = acc += j.prob[a];
    const std::size_t h = j.horizon();
    TrajectoryEnsemble ens;
    ens.meta.horizon = h;
    ens.paths = Matrix(paths, h);
    for (std::size_t m = 0; m < paths; ++m) {
        Rng rng(seed, m);
        const double u = rng.uniform() * acc;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        std::size_t a = it == cumulative.end() ? j.atoms() - 1 : static_cast<std::size_t>(it - cumulative.begin());
        while (j.prob[a] == 0.0 && a > 0) --a;  // guard against landing on a zero atom at the top edge
        const auto p = j.path(a);
        std::copy(p.begin(), p.end(), ens.paths.row(m).begin());
    }
    return ens;
}

}  // namespace fforms
