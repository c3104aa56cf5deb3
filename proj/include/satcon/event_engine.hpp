#pragma once

#include <optional>
#include <vector>

#include "satcon/dynamics.hpp"
#include "satcon/graph.hpp"
#include "satcon/types.hpp"

namespace satcon {

/// Per-agent threshold parameters of the triggering rule
/// ||e_i(t)||^2 <= alpha_i exp(-beta_i t).
struct TriggerRule {
    Vec alpha;
    Vec beta;

    static TriggerRule uniform(Index n, double alpha, double beta);
    void validate(Index n) const;
};

/// Squared-norm error budget of agent i at time t.
inline double threshold(const TriggerRule& rule, Index i, double t) {
    return rule.alpha(i) * std::exp(-rule.beta(i) * t);
}

/// Guaranteed minimum time between consecutive triggers of one agent,
/// evaluated at the later trigger time: sqrt(alpha)/(sqrt(p) h) *
/// exp(-beta t_next / 2).
inline double zeno_lower_bound(double alpha, double beta, Index p, double h,
                               double t_next) {
    return std::sqrt(alpha) / (std::sqrt(static_cast<double>(p)) * h) *
           std::exp(-0.5 * beta * t_next);
}

/// Trigger times and broadcast values per agent. Every agent triggers at
/// t = 0; afterwards times are strictly increasing.
struct EventLog {
    std::vector<std::vector<double>> times;
    std::vector<std::vector<Vec>> broadcasts;

    Index agents() const { return static_cast<Index>(times.size()); }
    Index total_events() const;
    double min_inter_event_gap() const;
};

/// First time t* in (t0, t_limit] at which ||e0 + (t - t0) drift||^2 first
/// exceeds alpha exp(-beta t), located to 1e-10 absolute; nullopt when the
/// budget is respected through t_limit. The error norm is a convex
/// quadratic and the budget a convex exponential, so their difference has
/// at most three monotonic pieces; each piece is bracketed and bisected,
/// which cannot skip a crossing.
std::optional<double> first_threshold_crossing(const Vec& e0, const Vec& drift,
                                               double alpha, double beta, double t0,
                                               double t_limit);

/// Next trigger of agent i given frozen broadcasts, or nullopt if none
/// occurs before t_limit. state.xhat must be current.
std::optional<double> next_trigger_time(const SystemState& state, Index i,
                                        const TriggerRule& rule, SaturationLevel h,
                                        const Laplacian& L, double t_limit);

struct EventOptions {
    double sample_dt = 0.01;
    Index event_cap = 1'000'000;
};

struct EventSimulation {
    Trajectory trajectory;
    EventLog log;
};

/// Event-driven run of the saturated consensus protocol with the
/// exponential-threshold triggering rule. Advances exactly from event to
/// event (states are piecewise linear); simultaneous triggers are processed
/// in ascending agent order. Throws ZenoSuspected past options.event_cap.
EventSimulation run_event_simulation(const WeightedDigraph& g, const TriggerRule& rule,
                                     SaturationLevel h, const Mat& x0, double t_end,
                                     const EventOptions& options = {});

/// Diagnostic gap between broadcast and true quantities at one sample:
/// e = xhat - x and f = sat(uhat) - sat(u).
struct MeasurementError {
    Mat e;
    Mat f;
};

MeasurementError measurement_errors(const TrajectorySample& sample, const Laplacian& L,
                                    SaturationLevel h);

}  // namespace satcon
