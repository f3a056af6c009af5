// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace evfair {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Tariff or supply series length disagrees with the time grid.
struct DimensionError : Error {
    using Error::Error;
};

/// One or more EVs cannot reach their departure target by pure charging.
struct InfeasibleTargetError : Error {
    std::vector<std::string> ev_ids;
    InfeasibleTargetError(std::string msg, std::vector<std::string> ids)
        : Error(std::move(msg)), ev_ids(std::move(ids)) {}
};

/// Requested a variable that the layout never allocated.
struct NotAllocatedError : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct AlignmentError : Error {
    using Error::Error;
};

struct CoverageError : Error {
    using Error::Error;
};

/// A solver output failed a Schedule invariant.
struct InvariantViolationError : Error {
    std::string ev_id;
    int slot = -1;
    double residual = 0.0;
    InvariantViolationError(std::string msg, std::string ev, int t, double res)
        : Error(std::move(msg)), ev_id(std::move(ev)), slot(t), residual(res) {}
};

struct TooLargeError : Error {
    using Error::Error;
};

struct NoFeasiblePointError : Error {
    using Error::Error;
};

struct ZeroBaselineError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace evfair
