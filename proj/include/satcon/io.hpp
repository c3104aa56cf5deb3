#pragma once

#include <filesystem>
#include <string>

#include "satcon/dynamics.hpp"
#include "satcon/event_engine.hpp"

namespace satcon {

/// Writes through a temp file in the same directory plus rename, so an
/// interrupted run never leaves a truncated file at the final path.
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// Columns: t, x per agent (flattened over the state dimension), raw input
/// u per agent, clamped input sat per agent.
std::string trajectory_csv(const Trajectory& trajectory);

/// One object per agent: {"agent": i, "times": [...]}.
std::string event_log_json(const EventLog& log);

/// Columns: agent, k, t_k, inter_event_gap, zeno_bound_at_t_k. The gap
/// column is empty on each agent's first row.
std::string event_log_csv(const EventLog& log, const TriggerRule& rule, Index p,
                          double h);

}  // namespace satcon
