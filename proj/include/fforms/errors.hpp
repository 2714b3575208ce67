#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fforms {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad parameters, violated preconditions, unparseable documents.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// The forecast type cannot support the requested task or metric at all.
class Unsupported : public Error {
public:
    using Error::Error;
};

/// The operation is feasible only with an assumption the caller did not supply
/// (copula, calibration data, tail model).
class MissingAssumption : public Error {
public:
    using Error::Error;
};

/// A query falls outside the support of a quantile grid and no tail model is attached.
class OutOfSupport : public MissingAssumption {
public:
    using MissingAssumption::MissingAssumption;
};

/// Iterative fit did not converge; carries the last iterate.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> last_iterate)
        : Error(what), last_iterate_(std::move(last_iterate)) {}

    const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

private:
    std::vector<double> last_iterate_;
};

}  // namespace fforms
