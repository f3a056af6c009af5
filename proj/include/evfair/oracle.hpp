// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "evfair/domain.hpp"

namespace evfair {

/// Exhaustive reference solver for tiny instances: every charge, discharge,
/// V2G and flow decision is enumerated on the grid {0, step, 2*step, ..., cap}
/// (the cap itself is always a level), assignments are filtered by the full
/// constraint set including the active fairness policy, the SOC recurrence is
/// evaluated exactly and the departure target matched within step/2. Returns
/// the minimum objective over surviving assignments.
///
/// Throws TooLargeError when the product of discrete choices exceeds 1e7 and
/// NoFeasiblePointError when nothing survives the filters.
double brute_force_oracle(const Scenario& s, double step_kwh);

}  // namespace evfair
