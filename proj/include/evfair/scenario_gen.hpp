// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "evfair/domain.hpp"

namespace evfair {

enum class SiteCase { Residential, Shopping };

/// Knobs for the two simulation cases. Everything the source material leaves
/// unstated (SOC distribution, Gaussian window parameters, supply caps) is a
/// configurable default here, never an asserted constant.
struct GenConfig {
    SiteCase site = SiteCase::Residential;
    int n_fixed = 50;   // EVs parked for the whole horizon
    int n_random = 50;  // EVs with Gaussian arrival/duration windows
    uint64_t seed = 1;

    double capacity_kwh = 50.0;
    double charger_kw = 7.0;  // converted to kWh/slot via slot_hours
    double min_soc_fraction = 0.0;
    double eff_charge = 0.95;
    double eff_discharge = 0.95;
    double degradation_coeff = 0.01;  // $ per kWh^2

    double target_fraction_lo = 0.70;
    double target_fraction_hi = 1.00;

    // discrete initial-SOC distribution: fraction of capacity -> weight
    std::vector<std::pair<double, double>> initial_soc_distribution = {
        {0.20, 0.25}, {0.30, 0.25}, {0.40, 0.25}, {0.50, 0.25}};

    // 0 = derive from fleet size (3.5 kWh/slot per EV)
    double grid_cap_kwh_per_slot = 0.0;
    // empty = zero renewable everywhere
    std::vector<double> renewable_profile;

    // arrival/duration Gaussians, in hours from slot 0
    double arrival_mean_h = 18.0;
    double arrival_sigma_h = 2.0;
    double duration_mean_h = 10.0;
    double duration_sigma_h = 3.0;

    // 0 = case default (48 residential, 18 shopping)
    int slot_count_override = 0;

    // sell price as a fraction of the buy price when no market series is given
    double sell_price_fraction = 0.8;

    /// Case-appropriate defaults: fleet split 50/50 vs 30/70, window Gaussians
    /// (residential arrivals 18:00 sigma 2 h, stays 10 h sigma 3 h; shopping
    /// arrivals 11:00 sigma 1.5 h, stays 2.5 h sigma 1 h).
    static GenConfig defaults_for(SiteCase site);
};

/// Case 1: residential site, 24 h horizon in half-hour slots. n_fixed EVs span
/// the whole horizon; the rest draw truncated-Gaussian windows. Deterministic
/// under a fixed seed; draws violating invariants or reachability are redrawn.
Scenario generate_residential(const GenConfig& cfg);

/// Case 2: shopping-center site, 9 h horizon (9 AM - 6 PM) in half-hour slots
/// with staff (full-horizon) and customer (random-window) fleets.
Scenario generate_shopping(const GenConfig& cfg);

/// Per-slot buy-price series from named levels and half-open slot ranges
/// [begin, end). Every slot must be covered exactly once.
struct TouWindow {
    int begin = 0;
    int end = 0;  // exclusive
    std::string level;  // key into `levels`
};

std::vector<double> build_tou_tariff(const std::map<std::string, double>& levels,
                                     const std::vector<TouWindow>& windows, const TimeGrid& grid);

/// Default TOU layout for each case (off-peak 0.10, shoulder 0.20,
/// peak 0.35 $/kWh; residential peak 17:00-22:00).
std::vector<double> default_tou(SiteCase site, const TimeGrid& grid);

/// Loads a half-hourly wholesale price CSV (`timestamp,price_per_mwh`) and
/// aligns it to the grid: exact at 0.5 h slots, mean-pooled pairs at 1.0 h.
/// Prices are converted to $/kWh. Rejects gaps, malformed rows (ParseError
/// with line numbers) and row counts that cannot tile the horizon
/// (AlignmentError).
std::vector<double> load_sell_prices(const std::string& path, const TimeGrid& grid);

/// Bell-shaped daytime renewable profile peaking mid-horizon, for studies
/// that want nonzero local generation.
std::vector<double> bell_renewable_profile(const TimeGrid& grid, double peak_kwh_per_slot);

}  // namespace evfair
