#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "satcon/lyapunov.hpp"
#include "satcon/scenario.hpp"

namespace satcon {

struct RunSummary {
    double final_consensus_error = 0.0;
    Index total_events = 0;                    ///< 0 in continuous mode
    double min_inter_event_gap = 0.0;          ///< +inf in continuous mode
    std::optional<double> saturation_exit_time;  ///< empty if the clamp never releases
};

struct SimulationResult {
    Trajectory trajectory;
    std::optional<EventLog> log;
    RunSummary summary;
};

/// Runs a scenario end to end. Refuses (NoSpanningTree) before any
/// integration when the graph lacks a directed spanning tree.
SimulationResult simulate_scenario(const Scenario& scenario);

/// One verified invariant: pass iff value <= bound (as recorded).
struct CheckOutcome {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double bound = 0.0;
};

struct CertificateReport {
    std::vector<CheckOutcome> checks;
    DecayReport decay;
    nlohmann::json diagnostics;  ///< fits, block energies, conditioning

    bool all_pass() const;
};

/// Evaluates every applicable invariant along a finished run: the
/// spectral-certificate chain, energy monotonicity, the dissipation
/// identity, trigger soundness and the inter-event lower bound, the
/// post-exit exponential envelope, and the input-norm bound.
CertificateReport verify_scenario(const Scenario& scenario, const SimulationResult& run);

/// Structural/spectral report of a scenario's graph: components, spanning
/// tree, left eigenvectors, eigenvalue ratios, certificate outcomes.
nlohmann::json analyze_scenario(const Scenario& scenario);

nlohmann::json summary_json(const Scenario& scenario, const RunSummary& summary);
nlohmann::json certificate_json(const CertificateReport& report);

struct RunArtifacts {
    std::filesystem::path trajectory_csv;
    std::filesystem::path event_log_json;     ///< empty in continuous mode
    std::filesystem::path event_log_csv;      ///< empty in continuous mode
    std::filesystem::path summary_json_path;
};

/// Writes trajectory/event/summary files atomically under out_dir, named
/// by the scenario stem.
RunArtifacts write_run_artifacts(const Scenario& scenario, const SimulationResult& run,
                                 const std::filesystem::path& out_dir);

}  // namespace satcon
