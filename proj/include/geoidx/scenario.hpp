#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geoidx/jsonio.hpp"
#include "geoidx/network.hpp"

namespace geoidx::scenario {

using jsonio::json;

struct Action {
    enum class Kind { Put, Delete, Query, Split, Merge, Partition, Scrub, SetMode };

    Kind kind = Kind::Put;
    Tick tick = 0;
    DcId dc = 0;
    Key key;
    Point point;
    query::Query query;
    /// Split takes one QPU name, merge two.
    std::vector<std::string> qpus;
    sim::PartitionWindow window;
    qpu::ReplMode mode = qpu::ReplMode::LogReplay;
    /// Where the action was declared, for runtime diagnostics.
    std::string origin;
};

const char* to_string(Action::Kind k);

struct Scenario {
    std::string name;
    std::shared_ptr<const Schema> schema;
    std::size_t dcs = 1;
    sim::NetConfig net;
    qpu::NetworkConfig network;
    qpu::Topology topology;
    /// Dataset puts followed by workload actions, stably ordered by tick.
    std::vector<Action> actions;
    bool oracle = false;
    bool trace = false;
    /// Tick cap for the whole run; exceeding it is a livelock.
    Tick max_ticks = 10'000'000;
};

/// Throws jsonio::ValidationError with the offending line.
Scenario parse_scenario(const jsonio::Document& doc, const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);

/// Workload files hold {"actions": [...]}.
std::vector<Action> parse_workload(const jsonio::Document& doc, const Schema& schema, std::size_t dcs);
std::vector<Action> load_workload(const std::string& path, const Schema& schema, std::size_t dcs);

/// "DC1" style names (or 1-based integers) to DC ids.
DcId parse_dc(const json& v, std::size_t dcs);

json schema_to_json(const Schema& schema);
Schema schema_from_json(const jsonio::Document& doc, const std::string& pointer);
json region_to_json(const Schema& schema, const Region& r);
json topology_to_json(const Schema& schema, const qpu::Topology& t);
json action_to_json(const Schema& schema, const Action& a);

}  // namespace geoidx::scenario
