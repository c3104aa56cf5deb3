#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "satcon/dynamics.hpp"
#include "satcon/event_engine.hpp"
#include "satcon/graph.hpp"

namespace satcon {

enum class RunMode { Continuous, Event };

/// A complete run description as ingested from a scenario file.
struct Scenario {
    std::string name;  ///< output stem, taken from the file name
    WeightedDigraph graph;
    double h = 10.0;
    Index p = 1;
    Mat x0;  ///< n x p
    RunMode mode = RunMode::Continuous;
    TriggerRule rule;  ///< populated when mode == Event
    double t_end = 30.0;
    double dt = 1e-3;
    double sample_dt = 0.01;
    std::uint64_t seed = 0;

    Index agents() const { return graph.size(); }
    SaturationLevel saturation() const { return SaturationLevel(h); }
};

/// Graph ingestion: an object holding exactly one of "adjacency" or
/// "laplacian" (n x n arrays). Laplacian input is validated for zero row
/// sums and nonpositive off-diagonal before being converted.
WeightedDigraph graph_from_json(const nlohmann::json& spec);

/// Parses and validates a scenario object. "alpha"/"beta" accept a scalar
/// (applied to every agent) or one value per agent, and are required in
/// event mode.
Scenario scenario_from_json(const nlohmann::json& j, std::string name);

/// Loads a scenario file; parse errors carry the file name and offset.
Scenario load_scenario(const std::filesystem::path& file);

}  // namespace satcon
