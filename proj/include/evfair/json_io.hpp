// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "evfair/solver.hpp"

namespace evfair {

/// Canonical scenario serialization (keys sorted, shortest round-trip
/// doubles); loading the emitted text reproduces the scenario bit-exactly.
std::string scenario_to_json(const Scenario& s, int indent = 2);
Scenario scenario_from_json_text(const std::string& text);

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& s, const std::string& path);

/// Content hash (FNV-1a 64) of the canonical serialization; stable across
/// re-serialization of the same scenario.
std::string fingerprint(const Scenario& s);

/// Schedule artifact. Flows are stored sparsely by EV id; per-EV series cover
/// the EV's window only.
std::string schedule_to_json(const Schedule& sched, const std::string& scenario_fingerprint,
                             int indent = 2);

/// Parses a schedule artifact and aligns its EV tracks and flow indices to
/// the scenario's fleet order. When fingerprint_out is given it receives the
/// artifact's recorded scenario fingerprint.
Schedule schedule_from_json_text(const std::string& text, const Scenario& s,
                                 std::string* fingerprint_out = nullptr);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace evfair
