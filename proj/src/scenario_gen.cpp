// SPDX-License-Identifier: Apache-2.0
#include "evfair/scenario_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace evfair {

GenConfig GenConfig::defaults_for(SiteCase site) {
    GenConfig cfg;
    cfg.site = site;
    if (site == SiteCase::Shopping) {
        cfg.n_fixed = 30;
        cfg.n_random = 70;
        cfg.arrival_mean_h = 2.0;  // 11:00, measured from the 9 AM opening
        cfg.arrival_sigma_h = 1.5;
        cfg.duration_mean_h = 2.5;
        cfg.duration_sigma_h = 1.0;
    }
    return cfg;
}

namespace {

double trunc_normal(std::mt19937_64& rng, double mean, double sigma, double lo, double hi) {
    std::normal_distribution<double> dist(mean, sigma);
    for (int k = 0; k < 100; ++k) {
        const double v = dist(rng);
        if (v >= lo && v <= hi) return v;
    }
    return std::clamp(mean, lo, hi);
}

double draw_discrete(std::mt19937_64& rng,
                     const std::vector<std::pair<double, double>>& dist) {
    double total = 0.0;
    for (const auto& [v, w] : dist) total += w;
    std::uniform_real_distribution<double> u(0.0, total);
    double r = u(rng);
    for (const auto& [v, w] : dist) {
        if (r < w) return v;
        r -= w;
    }
    return dist.back().first;
}

Scenario generate_site(const GenConfig& cfg, int default_slots, const char* start_label) {
    TimeGrid grid;
    grid.slot_count = cfg.slot_count_override > 0 ? cfg.slot_count_override : default_slots;
    grid.slot_hours = 0.5;
    grid.start_label = start_label;
    const int H = grid.slot_count;

    const double charge_rate = cfg.charger_kw * grid.slot_hours;
    const int total = cfg.n_fixed + cfg.n_random;

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<EvSpec> fleet;
    fleet.reserve(total);
    for (int k = 0; k < total; ++k) {
        EvSpec ev;
        char id[16];
        std::snprintf(id, sizeof(id), "ev%03d", k);
        ev.id = id;
        ev.capacity_kwh = cfg.capacity_kwh;
        ev.min_kwh = cfg.min_soc_fraction * cfg.capacity_kwh;
        ev.max_charge_kwh_per_slot = charge_rate;
        ev.max_discharge_kwh_per_slot = charge_rate;
        ev.v2g_cap_kwh_per_slot = charge_rate;
        ev.v2v_pair_cap_kwh_per_slot = charge_rate;
        ev.eff_charge = cfg.eff_charge;
        ev.eff_discharge = cfg.eff_discharge;
        ev.degradation_coeff = cfg.degradation_coeff;

        bool ok = false;
        for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
            if (k < cfg.n_fixed) {
                ev.arrival = 0;
                ev.departure = H - 1;
            } else {
                const double mean_a = cfg.arrival_mean_h / grid.slot_hours;
                const double sigma_a = cfg.arrival_sigma_h / grid.slot_hours;
                ev.arrival = static_cast<int>(
                    std::lround(trunc_normal(rng, mean_a, sigma_a, 0.0, H - 2.0)));
                const double mean_d = cfg.duration_mean_h / grid.slot_hours;
                const double sigma_d = cfg.duration_sigma_h / grid.slot_hours;
                const int duration = std::max(
                    1, static_cast<int>(
                           std::lround(trunc_normal(rng, mean_d, sigma_d, 1.0, H))));
                ev.departure = std::min(ev.arrival + duration, H - 1);
            }

            ev.initial_kwh = draw_discrete(rng, cfg.initial_soc_distribution) * cfg.capacity_kwh;
            const double frac = cfg.target_fraction_lo +
                                (cfg.target_fraction_hi - cfg.target_fraction_lo) * unif(rng);
            ev.target_kwh = std::max(ev.initial_kwh, frac * cfg.capacity_kwh);

            ok = ev.departure > ev.arrival || (cfg.n_fixed > 0 && k < cfg.n_fixed && H == 1);
            ok = ok && ev.initial_kwh >= ev.min_kwh && reachability_check(ev, grid) >= 0.0;
        }
        if (!ok) throw Error("scenario generation failed for " + ev.id + ": retries exhausted");
        fleet.push_back(std::move(ev));
    }

    Scenario s;
    s.grid = grid;
    s.fleet = std::move(fleet);
    s.tariff.buy_price = default_tou(cfg.site, grid);
    s.tariff.sell_price.resize(H);
    for (int t = 0; t < H; ++t)
        s.tariff.sell_price[t] = cfg.sell_price_fraction * s.tariff.buy_price[t];
    s.supply.grid_cap_kwh_per_slot =
        cfg.grid_cap_kwh_per_slot > 0.0 ? cfg.grid_cap_kwh_per_slot : total * charge_rate;
    if (cfg.renewable_profile.empty()) {
        s.supply.renewable_kwh.assign(H, 0.0);
    } else {
        if (static_cast<int>(cfg.renewable_profile.size()) != H)
            throw DimensionError("renewable profile length does not match the horizon");
        s.supply.renewable_kwh = cfg.renewable_profile;
    }
    s.mode = SolveMode::Joint;
    return s;
}

}  // namespace

Scenario generate_residential(const GenConfig& cfg) {
    if (cfg.site != SiteCase::Residential)
        throw Error("generate_residential called with a non-residential config");
    return generate_site(cfg, 48, "00:00");
}

Scenario generate_shopping(const GenConfig& cfg) {
    if (cfg.site != SiteCase::Shopping)
        throw Error("generate_shopping called with a non-shopping config");
    return generate_site(cfg, 18, "09:00");
}

std::vector<double> build_tou_tariff(const std::map<std::string, double>& levels,
                                     const std::vector<TouWindow>& windows, const TimeGrid& grid) {
    const int H = grid.slot_count;
    std::vector<int> cover(H, 0);
    std::vector<double> series(H, 0.0);
    for (const auto& w : windows) {
        auto it = levels.find(w.level);
        if (it == levels.end()) throw CoverageError("unknown price level: " + w.level);
        for (int t = std::max(0, w.begin); t < std::min(H, w.end); ++t) {
            cover[t] += 1;
            series[t] = it->second;
        }
        if (w.begin < 0 || w.end > H)
            throw CoverageError("window [" + std::to_string(w.begin) + ", " +
                                std::to_string(w.end) + ") exceeds the horizon");
    }
    for (int t = 0; t < H; ++t) {
        if (cover[t] == 0)
            throw CoverageError("slot " + std::to_string(t) + " not covered by any window");
        if (cover[t] > 1)
            throw CoverageError("slot " + std::to_string(t) + " covered more than once");
    }
    return series;
}

std::vector<double> default_tou(SiteCase site, const TimeGrid& grid) {
    const double start_hour = site == SiteCase::Shopping ? 9.0 : 0.0;
    std::vector<double> series(grid.slot_count);
    for (int t = 0; t < grid.slot_count; ++t) {
        const double h = std::fmod(start_hour + t * grid.slot_hours, 24.0);
        if (h >= 17.0 && h < 22.0)
            series[t] = 0.35;  // peak
        else if (h >= 7.0 && h < 17.0)
            series[t] = 0.20;  // shoulder
        else
            series[t] = 0.10;  // off-peak
    }
    return series;
}

namespace {

// days-from-civil, to order timestamps without timezone machinery
int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

bool parse_timestamp(const std::string& text, int64_t* minutes) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    const int n = std::sscanf(text.c_str(), "%d-%d-%d%*[T ]%d:%d:%d", &y, &mo, &d, &h, &mi, &sec);
    if (n < 5) return false;
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59) return false;
    *minutes = days_from_civil(y, mo, d) * 1440 + h * 60 + mi;
    return true;
}

}  // namespace

std::vector<double> load_sell_prices(const std::string& path, const TimeGrid& grid) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open price file: " + path);

    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    ++lineno;
    // tolerate whitespace and a UTF-8 BOM in the header
    std::string header = line;
    header.erase(std::remove_if(header.begin(), header.end(),
                                [](unsigned char c) { return std::isspace(c) || c >= 0x80; }),
                 header.end());
    if (header != "timestamp,price_per_mwh")
        throw ParseError(path + ":1: expected header 'timestamp,price_per_mwh'");

    std::vector<double> per_mwh;
    int64_t prev_minutes = 0;
    bool have_prev = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseError(path + ":" + std::to_string(lineno) + ": missing comma");
        const std::string ts = line.substr(0, comma);
        const std::string price_text = line.substr(comma + 1);
        int64_t minutes = 0;
        if (!parse_timestamp(ts, &minutes))
            throw ParseError(path + ":" + std::to_string(lineno) + ": bad timestamp '" + ts + "'");
        double price = 0.0;
        try {
            size_t used = 0;
            price = std::stod(price_text, &used);
        } catch (const std::exception&) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": bad price '" + price_text +
                             "'");
        }
        if (have_prev && minutes - prev_minutes != 30)
            throw AlignmentError(path + ":" + std::to_string(lineno) +
                                 ": rows are not contiguous half-hourly (gap of " +
                                 std::to_string(minutes - prev_minutes) + " minutes)");
        prev_minutes = minutes;
        have_prev = true;
        per_mwh.push_back(price);
    }

    const int H = grid.slot_count;
    std::vector<double> out(H);
    if (std::abs(grid.slot_hours - 0.5) < 1e-12) {
        if (static_cast<int>(per_mwh.size()) != H)
            throw AlignmentError(path + ": " + std::to_string(per_mwh.size()) +
                                 " rows cannot tile a " + std::to_string(H) + "-slot grid");
        for (int t = 0; t < H; ++t) out[t] = per_mwh[t] / 1000.0;
    } else if (std::abs(grid.slot_hours - 1.0) < 1e-12) {
        if (static_cast<int>(per_mwh.size()) != 2 * H)
            throw AlignmentError(path + ": " + std::to_string(per_mwh.size()) +
                                 " rows cannot tile a " + std::to_string(H) + "-slot hourly grid");
        for (int t = 0; t < H; ++t)
            out[t] = 0.5 * (per_mwh[2 * t] + per_mwh[2 * t + 1]) / 1000.0;
    } else {
        throw AlignmentError("price alignment supports 0.5 h and 1.0 h slots only");
    }
    return out;
}

std::vector<double> bell_renewable_profile(const TimeGrid& grid, double peak_kwh_per_slot) {
    std::vector<double> out(grid.slot_count);
    const double H = grid.slot_count;
    for (int t = 0; t < grid.slot_count; ++t) {
        const double s = std::sin(M_PI * (t + 0.5) / H);
        out[t] = peak_kwh_per_slot * s * s;
    }
    return out;
}

}  // namespace evfair
