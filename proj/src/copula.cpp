#include "fforms/copula.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fforms/errors.hpp"
#include "fforms/rng.hpp"
#include "fforms/special.hpp"
#include "parallel.hpp"

namespace fforms {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kUMin = 0x1.0p-60;
constexpr double kUMax = 1.0 - 0x1.0p-53;

double clamp_unit(double u) { return std::clamp(u, kUMin, kUMax); }

Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c);
    return out;
}

void check_correlation(const Matrix& r, std::size_t h) {
    if (r.rows() != h || r.cols() != h) {
        throw InvalidInput("correlation matrix must be " + std::to_string(h) + "x" + std::to_string(h));
    }
    for (std::size_t i = 0; i < h; ++i) {
        if (std::abs(r(i, i) - 1.0) > 1e-12) throw InvalidInput("correlation matrix must have unit diagonal");
        for (std::size_t j = 0; j < h; ++j) {
            if (!std::isfinite(r(i, j))) throw InvalidInput("correlation matrix has non-finite entries");
            if (std::abs(r(i, j) - r(j, i)) > 1e-12) throw InvalidInput("correlation matrix must be symmetric");
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(to_eigen(r), Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 1e-10) {
        throw InvalidInput("correlation matrix is not positive definite (smallest eigenvalue <= 1e-10)");
    }
}

Eigen::MatrixXd cholesky(const Matrix& r) {
    Eigen::LLT<Eigen::MatrixXd> llt(to_eigen(r));
    if (llt.info() != Eigen::Success) throw InvalidInput("correlation matrix factorization failed");
    return llt.matrixL();
}

/// Correlated normal rows z = L * eps, optionally scaled to multivariate t.
Matrix sample_elliptical(const Eigen::MatrixXd& chol, std::size_t paths, std::uint64_t seed, double nu) {
    const std::size_t h = static_cast<std::size_t>(chol.rows());
    Matrix u(paths, h);
    detail::parallel_for(paths, [&](std::size_t begin, std::size_t end) {
        Eigen::VectorXd eps(h);
        for (std::size_t m = begin; m < end; ++m) {
            Rng rng(seed, m);
            for (std::size_t k = 0; k < h; ++k) eps[k] = rng.normal();
            Eigen::VectorXd z = chol.triangularView<Eigen::Lower>() * eps;
            if (nu > 0.0) {
                const double w = std::sqrt(nu / rng.chi_squared(nu));
                for (std::size_t k = 0; k < h; ++k) u(m, k) = clamp_unit(special::student_t_cdf(z[k] * w, nu));
            } else {
                for (std::size_t k = 0; k < h; ++k) u(m, k) = clamp_unit(special::normal_cdf(z[k]));
            }
        }
    });
    return u;
}

Matrix sample_ecc(const copula::Ecc& spec, std::size_t paths, std::size_t h, std::uint64_t seed) {
    const Matrix& ref = spec.reference.paths;
    const std::size_t n = ref.rows();

    // Row matching r(m).
    std::vector<std::size_t> match(paths);
    if (spec.variant == copula::EccVariant::r) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        Rng rng(seed, streams::kEccPermutation);
        for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
        for (std::size_t m = 0; m < paths; ++m) match[m] = perm[m % n];
    } else {
        std::vector<std::size_t> by_first(n);
        std::iota(by_first.begin(), by_first.end(), 0);
        std::stable_sort(by_first.begin(), by_first.end(),
                         [&](std::size_t a, std::size_t b) { return ref(a, 0) < ref(b, 0); });
        for (std::size_t m = 0; m < paths; ++m) {
            const auto pos = static_cast<std::size_t>((static_cast<double>(m) + 0.5) * static_cast<double>(n) /
                                                      static_cast<double>(paths));
            match[m] = by_first[std::min(pos, n - 1)];
        }
    }

    Matrix u(paths, h);
    detail::parallel_for(paths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t m = begin; m < end; ++m) {
            Rng rng(seed, m);
            for (std::size_t k = 0; k < h; ++k) u(m, k) = rng.uniform();
        }
    });

    std::vector<double> col(paths);
    std::vector<std::size_t> order(paths);
    for (std::size_t k = 0; k < h; ++k) {
        for (std::size_t m = 0; m < paths; ++m) col[m] = u(m, k);
        std::sort(col.begin(), col.end());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return ref(match[a], k) < ref(match[b], k); });
        for (std::size_t j = 0; j < paths; ++j) u(order[j], k) = col[j];
    }
    return u;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

std::string copula_name(const CopulaSpec& spec) {
    return std::visit(overloaded{[](const copula::Independence&) { return std::string("independence"); },
                                 [](const copula::Comonotonic&) { return std::string("comonotonic"); },
                                 [](const copula::Countermonotonic&) { return std::string("countermonotonic"); },
                                 [](const copula::GaussianAr1&) { return std::string("gaussian_ar1"); },
                                 [](const copula::GaussianFull&) { return std::string("gaussian_full"); },
                                 [](const copula::StudentT&) { return std::string("student_t"); },
                                 [](const copula::Ecc&) { return std::string("ecc"); }},
                      spec);
}

std::string describe(const CopulaSpec& spec) {
    return std::visit(
        overloaded{[](const copula::GaussianAr1& c) { return "gaussian_ar1(rho=" + fmt(c.rho) + ")"; },
                   [](const copula::GaussianFull& c) {
                       return "gaussian_full(" + std::to_string(c.correlation.rows()) + "x" +
                              std::to_string(c.correlation.cols()) + ")";
                   },
                   [](const copula::StudentT& c) {
                       return "student_t(nu=" + fmt(c.nu) + ", " + std::to_string(c.correlation.rows()) + "x" +
                              std::to_string(c.correlation.cols()) + ")";
                   },
                   [](const copula::Ecc& c) {
                       return std::string("ecc_") + (c.variant == copula::EccVariant::q ? "q" : "r") +
                              "(reference M=" + std::to_string(c.reference.size()) + ")";
                   },
                   [&](const auto&) { return copula_name(spec); }},
        spec);
}

void validate_copula(const CopulaSpec& spec, std::size_t h) {
    if (h < 1) throw InvalidInput("copula horizon must be >= 1");
    std::visit(overloaded{[](const copula::Independence&) {}, [](const copula::Comonotonic&) {},
                          [&](const copula::Countermonotonic&) {
                              if (h != 2) {
                                  throw InvalidInput("countermonotonic copula exists only for h = 2 (got h = " +
                                                     std::to_string(h) + ")");
                              }
                          },
                          [](const copula::GaussianAr1& c) {
                              if (!(std::abs(c.rho) < 1.0)) throw InvalidInput("gaussian_ar1 requires |rho| < 1");
                          },
                          [&](const copula::GaussianFull& c) { check_correlation(c.correlation, h); },
                          [&](const copula::StudentT& c) {
                              if (!(c.nu > 0.0) || !std::isfinite(c.nu)) throw InvalidInput("student_t copula requires nu > 0");
                              check_correlation(c.correlation, h);
                          },
                          [&](const copula::Ecc& c) {
                              require_valid(ForecastDocument{c.reference});
                              if (c.reference.paths.cols() != h) {
                                  throw InvalidInput("ecc reference horizon differs from target horizon");
                              }
                          }},
               spec);
}

Matrix ar1_correlation(double rho, std::size_t h) {
    Matrix r(h, h);
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < h; ++j) r(i, j) = std::pow(rho, static_cast<double>(i > j ? i - j : j - i));
    return r;
}

Matrix sample_copula(const CopulaSpec& spec, std::size_t paths, std::size_t h, std::uint64_t seed) {
    validate_copula(spec, h);
    if (paths < 1) throw InvalidInput("number of paths must be >= 1");
    return std::visit(
        overloaded{
            [&](const copula::Independence&) {
                Matrix u(paths, h);
                detail::parallel_for(paths, [&](std::size_t b, std::size_t e) {
                    for (std::size_t m = b; m < e; ++m) {
                        Rng rng(seed, m);
                        for (std::size_t k = 0; k < h; ++k) u(m, k) = rng.uniform();
                    }
                });
                return u;
            },
            [&](const copula::Comonotonic&) {
                Matrix u(paths, h);
                for (std::size_t m = 0; m < paths; ++m) {
                    const double v = Rng(seed, m).uniform();
                    for (std::size_t k = 0; k < h; ++k) u(m, k) = v;
                }
                return u;
            },
            [&](const copula::Countermonotonic&) {
                Matrix u(paths, 2);
                for (std::size_t m = 0; m < paths; ++m) {
                    const double v = Rng(seed, m).uniform();
                    u(m, 0) = v;
                    u(m, 1) = 1.0 - v;
                }
                return u;
            },
            [&](const copula::GaussianAr1& c) {
                return sample_elliptical(cholesky(ar1_correlation(c.rho, h)), paths, seed, 0.0);
            },
            [&](const copula::GaussianFull& c) { return sample_elliptical(cholesky(c.correlation), paths, seed, 0.0); },
            [&](const copula::StudentT& c) { return sample_elliptical(cholesky(c.correlation), paths, seed, c.nu); },
            [&](const copula::Ecc& c) { return sample_ecc(c, paths, h, seed); }},
        spec);
}

}  // namespace fforms
