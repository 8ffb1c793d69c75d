#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geoidx/scenario.hpp"

namespace geoidx::runner {

inline constexpr const char* kMetricsHeader =
    "tick,query_id,level,qpus_visited,cache_hits,candidate_checked,false_positives_removed,result_size,lag";
inline constexpr const char* kModeSwitchHeader = "tick,qpu,from,to,selectivity";

struct RunOptions {
    /// Overrides the scenario seed.
    std::optional<std::uint64_t> seed;
    /// Record the message-level event trace.
    bool trace = false;
    /// Compare every query and every leaf index against the oracle.
    bool oracle = false;
};

struct RunOutput {
    std::string metrics_csv;
    std::string routing_trace;
    std::string event_trace_csv;
    std::string verify_report;
    std::string mode_switches_csv;
    std::string action_log;
    std::string topology;
    /// A scenario holding the final live objects and QPU tree.
    scenario::json final_state;

    bool trace_enabled = false;
    bool verify_enabled = false;
    std::size_t checks = 0;
    std::size_t failures = 0;
    std::vector<qpu::QueryResult> results;
    Tick final_tick = 0;

    bool passed() const { return failures == 0; }
};

/// "DC1:0;DC2:3".
std::string format_lag(const std::map<DcId, Seq>& lag);
std::string metrics_row(const qpu::QueryResult& r);

/// Runs the scenario to quiescence. Throws sim::LivelockError when the run
/// exceeds the scenario's tick cap.
RunOutput run(const scenario::Scenario& s, const RunOptions& opts = {});

struct OneShot {
    qpu::QueryResult result;
    /// Oracle scan of the origin replica when the query was routed.
    std::set<Key> current;
};

/// Loads the scenario's actions, runs to quiescence, scrubs, lets clocks
/// settle, then routes q.
OneShot one_shot(const scenario::Scenario& s, const query::Query& q, const RunOptions& opts = {});

/// Writes metrics.csv, routing_trace.txt, mode_switches.csv, actions.log,
/// topology.txt and final_state.json, plus events.csv and verify_report.txt
/// when enabled.
void write_outputs(const RunOutput& out, const std::string& dir);

scenario::json network_config_to_json(const Schema& schema, const qpu::NetworkConfig& c);

}  // namespace geoidx::runner
