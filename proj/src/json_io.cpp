// SPDX-License-Identifier: Apache-2.0
#include "evfair/json_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace evfair {

using nlohmann::json;

namespace {

json grid_to_json(const TimeGrid& g) {
    return {{"slot_count", g.slot_count},
            {"slot_hours", g.slot_hours},
            {"start_label", g.start_label}};
}

json ev_to_json(const EvSpec& ev) {
    return {{"id", ev.id},
            {"arrival", ev.arrival},
            {"departure", ev.departure},
            {"capacity_kwh", ev.capacity_kwh},
            {"min_kwh", ev.min_kwh},
            {"initial_kwh", ev.initial_kwh},
            {"target_kwh", ev.target_kwh},
            {"max_charge_kwh_per_slot", ev.max_charge_kwh_per_slot},
            {"max_discharge_kwh_per_slot", ev.max_discharge_kwh_per_slot},
            {"v2g_cap_kwh_per_slot", ev.v2g_cap_kwh_per_slot},
            {"v2v_pair_cap_kwh_per_slot", ev.v2v_pair_cap_kwh_per_slot},
            {"eff_charge", ev.eff_charge},
            {"eff_discharge", ev.eff_discharge},
            {"degradation_coeff", ev.degradation_coeff}};
}

json fairness_to_json(const FairnessPolicy& p) {
    json j{{"variant", to_string(p.variant)}};
    switch (p.variant) {
        case FairnessVariant::HardPerSlot: j["zbar"] = p.zbar; break;
        case FairnessVariant::SoftCumulative: j["zbar_c"] = p.zbar_c; break;
        case FairnessVariant::Budget:
            j["theta"] = p.theta;
            j["budget_per_ev"] = p.budget_per_ev;
            if (!p.budget_overrides.empty()) {
                json ov = json::object();
                for (const auto& [id, d] : p.budget_overrides) ov[id] = d;
                j["budget_overrides"] = ov;
            }
            break;
        case FairnessVariant::Unconstrained: break;
    }
    return j;
}

}  // namespace

std::string scenario_to_json(const Scenario& s, int indent) {
    json j;
    j["grid"] = grid_to_json(s.grid);
    json fleet = json::array();
    for (const auto& ev : s.fleet) fleet.push_back(ev_to_json(ev));
    j["fleet"] = fleet;
    j["tariff"] = {{"buy_price", s.tariff.buy_price}, {"sell_price", s.tariff.sell_price}};
    j["supply"] = {{"grid_cap_kwh_per_slot", s.supply.grid_cap_kwh_per_slot},
                   {"renewable_kwh", s.supply.renewable_kwh}};
    j["fairness"] = fairness_to_json(s.fairness);
    j["mode"] = to_string(s.mode);
    j["solver"] = {{"gap_tol", s.solver.gap_tol},
                   {"node_limit", s.solver.node_limit},
                   {"tol", s.solver.tol},
                   {"mode", s.solver.mode}};
    if (!s.v2v_cap_overrides.empty()) {
        json ov = json::array();
        for (const auto& o : s.v2v_cap_overrides)
            ov.push_back(
                {{"from", o.from}, {"to", o.to}, {"cap_kwh_per_slot", o.cap_kwh_per_slot}});
        j["v2v_cap_overrides"] = ov;
    }
    return j.dump(indent);
}

Scenario scenario_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("scenario JSON parse failure: ") + e.what());
    }
    try {
        Scenario s;
        const auto& g = j.at("grid");
        s.grid.slot_count = g.at("slot_count").get<int>();
        s.grid.slot_hours = g.at("slot_hours").get<double>();
        s.grid.start_label = g.value("start_label", std::string());

        for (const auto& e : j.at("fleet")) {
            EvSpec ev;
            ev.id = e.at("id").get<std::string>();
            ev.arrival = e.at("arrival").get<int>();
            ev.departure = e.at("departure").get<int>();
            ev.capacity_kwh = e.at("capacity_kwh").get<double>();
            ev.min_kwh = e.at("min_kwh").get<double>();
            ev.initial_kwh = e.at("initial_kwh").get<double>();
            ev.target_kwh = e.at("target_kwh").get<double>();
            ev.max_charge_kwh_per_slot = e.at("max_charge_kwh_per_slot").get<double>();
            ev.max_discharge_kwh_per_slot = e.at("max_discharge_kwh_per_slot").get<double>();
            ev.v2g_cap_kwh_per_slot = e.at("v2g_cap_kwh_per_slot").get<double>();
            ev.v2v_pair_cap_kwh_per_slot = e.at("v2v_pair_cap_kwh_per_slot").get<double>();
            ev.eff_charge = e.at("eff_charge").get<double>();
            ev.eff_discharge = e.at("eff_discharge").get<double>();
            ev.degradation_coeff = e.at("degradation_coeff").get<double>();
            s.fleet.push_back(std::move(ev));
        }

        const auto& t = j.at("tariff");
        s.tariff.buy_price = t.at("buy_price").get<std::vector<double>>();
        s.tariff.sell_price = t.at("sell_price").get<std::vector<double>>();

        const auto& sup = j.at("supply");
        s.supply.grid_cap_kwh_per_slot = sup.at("grid_cap_kwh_per_slot").get<double>();
        s.supply.renewable_kwh = sup.at("renewable_kwh").get<std::vector<double>>();

        const auto& f = j.at("fairness");
        s.fairness.variant = fairness_variant_from_string(f.at("variant").get<std::string>());
        s.fairness.zbar = f.value("zbar", 0.0);
        s.fairness.zbar_c = f.value("zbar_c", 0.0);
        s.fairness.theta = f.value("theta", 0.0);
        s.fairness.budget_per_ev = f.value("budget_per_ev", 0.0);
        if (f.contains("budget_overrides"))
            for (const auto& [id, d] : f.at("budget_overrides").items())
                s.fairness.budget_overrides[id] = d.get<double>();

        s.mode = mode_from_string(j.at("mode").get<std::string>());

        if (j.contains("solver")) {
            const auto& sv = j.at("solver");
            s.solver.gap_tol = sv.value("gap_tol", s.solver.gap_tol);
            s.solver.node_limit = sv.value("node_limit", s.solver.node_limit);
            s.solver.tol = sv.value("tol", s.solver.tol);
            s.solver.mode = sv.value("mode", s.solver.mode);
        }

        if (j.contains("v2v_cap_overrides"))
            for (const auto& o : j.at("v2v_cap_overrides"))
                s.v2v_cap_overrides.push_back({o.at("from").get<std::string>(),
                                               o.at("to").get<std::string>(),
                                               o.at("cap_kwh_per_slot").get<double>()});
        return s;
    } catch (const json::exception& e) {
        throw ParseError(std::string("scenario JSON missing or mistyped field: ") + e.what());
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << content;
    if (!out) throw IoError("failed writing " + path);
}

Scenario load_scenario(const std::string& path) {
    return scenario_from_json_text(read_text_file(path));
}

void save_scenario(const Scenario& s, const std::string& path) {
    write_text_file(path, scenario_to_json(s) + "\n");
}

std::string fingerprint(const Scenario& s) {
    const std::string canon = scenario_to_json(s, -1);
    uint64_t h = 1469598103934665603ull;  // FNV-1a 64
    for (unsigned char c : canon) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string schedule_to_json(const Schedule& sched, const std::string& scenario_fingerprint,
                             int indent) {
    json j;
    j["fingerprint"] = scenario_fingerprint;
    j["slot_count"] = sched.slot_count;
    j["slot_hours"] = sched.slot_hours;
    j["objective"] = sched.objective;
    json evs = json::array();
    for (const auto& track : sched.evs) {
        json e;
        e["id"] = track.id;
        e["arrival"] = track.arrival;
        e["departure"] = track.departure;
        std::vector<double> ch, dis, grid, renew, v2g, soc, flag;
        for (const auto& v : track.slots) {
            ch.push_back(v.charge_kwh);
            dis.push_back(v.discharge_kwh);
            grid.push_back(v.grid_kwh);
            renew.push_back(v.renewable_kwh);
            v2g.push_back(v.v2g_kwh);
            soc.push_back(v.soc_kwh);
            flag.push_back(v.mode_flag);
        }
        e["charge_kwh"] = ch;
        e["discharge_kwh"] = dis;
        e["grid_kwh"] = grid;
        e["renewable_kwh"] = renew;
        e["v2g_kwh"] = v2g;
        e["soc_kwh"] = soc;
        e["mode_flag"] = flag;
        evs.push_back(std::move(e));
    }
    j["evs"] = evs;
    json flows = json::array();
    for (const auto& f : sched.flows)
        flows.push_back({{"from", sched.evs.at(f.from_ev).id},
                         {"to", sched.evs.at(f.to_ev).id},
                         {"slot", f.slot},
                         {"kwh", f.kwh}});
    j["flows"] = flows;
    return j.dump(indent);
}

Schedule schedule_from_json_text(const std::string& text, const Scenario& s,
                                 std::string* fingerprint_out) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("schedule JSON parse failure: ") + e.what());
    }
    try {
        // run artifacts embed the schedule under a key; accept both shapes
        if (j.contains("schedule")) j = j.at("schedule");

        Schedule sched;
        if (fingerprint_out) *fingerprint_out = j.value("fingerprint", std::string());
        sched.slot_count = j.at("slot_count").get<int>();
        sched.slot_hours = j.at("slot_hours").get<double>();
        sched.objective = j.at("objective").get<double>();

        sched.evs.resize(s.fleet.size());
        std::vector<bool> seen(s.fleet.size(), false);
        for (const auto& e : j.at("evs")) {
            const std::string id = e.at("id").get<std::string>();
            const int idx = s.ev_index(id);
            if (idx < 0) throw ParseError("schedule references unknown EV id: " + id);
            Schedule::EvTrack track;
            track.id = id;
            track.arrival = e.at("arrival").get<int>();
            track.departure = e.at("departure").get<int>();
            const auto ch = e.at("charge_kwh").get<std::vector<double>>();
            const auto dis = e.at("discharge_kwh").get<std::vector<double>>();
            const auto grid = e.at("grid_kwh").get<std::vector<double>>();
            const auto renew = e.at("renewable_kwh").get<std::vector<double>>();
            const auto v2g = e.at("v2g_kwh").get<std::vector<double>>();
            const auto soc = e.at("soc_kwh").get<std::vector<double>>();
            const auto flag = e.at("mode_flag").get<std::vector<double>>();
            const size_t len = static_cast<size_t>(track.departure - track.arrival + 1);
            if (ch.size() != len || dis.size() != len || grid.size() != len ||
                renew.size() != len || v2g.size() != len || soc.size() != len ||
                flag.size() != len)
                throw ParseError("schedule series length mismatch for EV " + id);
            track.slots.resize(len);
            for (size_t k = 0; k < len; ++k) {
                track.slots[k] = {ch[k], dis[k], grid[k], renew[k],
                                  v2g[k], soc[k], flag[k]};
            }
            sched.evs[idx] = std::move(track);
            seen[idx] = true;
        }
        for (size_t i = 0; i < seen.size(); ++i)
            if (!seen[i]) throw ParseError("schedule is missing EV " + s.fleet[i].id);

        for (const auto& f : j.at("flows")) {
            const int from = s.ev_index(f.at("from").get<std::string>());
            const int to = s.ev_index(f.at("to").get<std::string>());
            if (from < 0 || to < 0) throw ParseError("flow references unknown EV id");
            sched.flows.push_back(
                {from, to, f.at("slot").get<int>(), f.at("kwh").get<double>()});
        }
        return sched;
    } catch (const json::exception& e) {
        throw ParseError(std::string("schedule JSON missing or mistyped field: ") + e.what());
    }
}

}  // namespace evfair
