#pragma once

// Special functions used by the distribution families. Everything here is
// self-contained; no external special-function library is assumed.

namespace fforms::special {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_pdf(double z);
double normal_cdf(double z);
/// Inverse of the standard normal CDF (Wichura's AS241, ~1e-16 relative accuracy).
double normal_quantile(double p);

double log_beta(double a, double b);
/// Regularized incomplete beta I_x(a, b) by Lentz continued fraction.
double incomplete_beta(double a, double b, double x);
double digamma(double x);

double student_t_pdf(double t, double nu);
double student_t_log_pdf(double t, double nu);
double student_t_cdf(double t, double nu);
/// Bracketed bisection with Newton polish; |cdf(result) - p| below 1e-13 in the body.
double student_t_quantile(double p, double nu);

}  // namespace fforms::special
