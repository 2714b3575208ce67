#include "fforms/synth.hpp"

#include <cmath>

#include "fforms/errors.hpp"
#include "fforms/rng.hpp"

namespace fforms {

namespace {

void check_rho(double rho) {
    if (!std::isfinite(rho) || !(std::abs(rho) < 1.0)) {
        throw InvalidInput("AR(1) needs |rho| < 1 for a stationary series");
    }
}

}  // namespace

HistorySeries simulate_ar1(double rho, std::size_t n, std::uint64_t seed) {
    check_rho(rho);
    if (n < 1) throw InvalidInput("history length must be >= 1");
    Rng rng(seed, streams::kSynthHistory);
    HistorySeries out;
    out.values.reserve(n);
    double y = rng.normal() / std::sqrt(1.0 - rho * rho);
    out.values.push_back(y);
    for (std::size_t t = 1; t < n; ++t) {
        y = rho * y + rng.normal();
        out.values.push_back(y);
    }
    return out;
}

Ar1Conditional ar1_conditional(double rho, double last, std::size_t h) {
    check_rho(rho);
    if (h < 1) throw InvalidInput("horizon must be >= 1");
    Ar1Conditional c;
    c.mean.resize(h);
    double p = 1.0;
    for (std::size_t k = 0; k < h; ++k) {
        p *= rho;
        c.mean[k] = p * last;
    }
    c.covariance = Matrix(h, h);
    for (std::size_t j = 0; j < h; ++j) {
        for (std::size_t k = 0; k < h; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i <= std::min(j, k); ++i) {
                s += std::pow(rho, static_cast<double>(j - i)) * std::pow(rho, static_cast<double>(k - i));
            }
            c.covariance(j, k) = s;
        }
    }
    return c;
}

TrajectoryEnsemble simulate_ar1_paths(double rho, double last, std::size_t h, std::size_t paths, std::uint64_t seed) {
    check_rho(rho);
    if (h < 1 || paths < 1) throw InvalidInput("need h >= 1 and at least one path");
    TrajectoryEnsemble ens;
    ens.meta.horizon = h;
    ens.paths = Matrix(paths, h);
    for (std::size_t m = 0; m < paths; ++m) {
        Rng rng(seed, m);
        double y = last;
        for (std::size_t k = 0; k < h; ++k) {
            y = rho * y + rng.normal();
            ens.paths(m, k) = y;
        }
    }
    return ens;
}

std::vector<Ar1Window> simulate_ar1_windows(double rho, std::size_t h, std::size_t windows, std::uint64_t seed) {
    check_rho(rho);
    std::vector<Ar1Window> out(windows);
    for (std::size_t i = 0; i < windows; ++i) {
        Rng rng(seed, i);
        auto& w = out[i];
        w.origin_value = rng.normal() / std::sqrt(1.0 - rho * rho);
        double y = w.origin_value;
        w.realization.resize(h);
        for (std::size_t k = 0; k < h; ++k) {
            y = rho * y + rng.normal();
            w.realization[k] = y;
        }
        w.truth = ar1_conditional(rho, w.origin_value, h);
    }
    return out;
}

}  // namespace fforms
