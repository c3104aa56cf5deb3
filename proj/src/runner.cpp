#include "satcon/runner.hpp"

#include <cmath>
#include <limits>

#include "satcon/errors.hpp"
#include "satcon/io.hpp"
#include "satcon/spectral.hpp"

namespace satcon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> sample_times(const Trajectory& t) {
    std::vector<double> out;
    out.reserve(t.samples.size());
    for (const auto& s : t.samples) out.push_back(s.t);
    return out;
}

TriggerRule restrict_rule(const TriggerRule& rule, const PFDecomposition& pf) {
    const int M = pf.block_count();
    const Index nM = pf.block_sizes[M - 1];
    TriggerRule sub;
    sub.alpha.resize(nM);
    sub.beta.resize(nM);
    for (Index r = 0; r < nM; ++r) {
        Index agent = pf.permutation[static_cast<std::size_t>(pf.offsets[M - 1] + r)];
        sub.alpha(r) = rule.alpha(agent);
        sub.beta(r) = rule.beta(agent);
    }
    return sub;
}

class ReportBuilder {
public:
    explicit ReportBuilder(CertificateReport& report) : report_(report) {}

    /// pass iff value <= bound
    void upper(std::string name, double value, double bound) {
        report_.checks.push_back({std::move(name), value <= bound, value, bound});
    }
    /// pass iff value >= bound
    void lower(std::string name, double value, double bound) {
        report_.checks.push_back({std::move(name), value >= bound, value, bound});
    }
    void from_certificates(const std::vector<CertificateCheck>& certs) {
        for (const auto& c : certs) {
            report_.checks.push_back({c.name, c.pass, c.margin, -c.tolerance});
        }
    }

private:
    CertificateReport& report_;
};

void check_structural(ReportBuilder& rb, const Trajectory& traj, double h, Index p) {
    bool increasing = true;
    double max_speed_excess = -kInf;
    double max_sat = 0.0;
    const double speed_cap = h * std::sqrt(static_cast<double>(p));
    for (std::size_t k = 0; k < traj.samples.size(); ++k) {
        const auto& s = traj.samples[k];
        max_sat = std::max(max_sat, s.sat_u.cwiseAbs().maxCoeff());
        if (k > 0) {
            const auto& prev = traj.samples[k - 1];
            increasing = increasing && s.t > prev.t;
            double dt = s.t - prev.t;
            for (Index i = 0; i < s.x.rows(); ++i) {
                double moved = (s.x.row(i) - prev.x.row(i)).norm();
                max_speed_excess = std::max(max_speed_excess, moved - dt * speed_cap);
            }
        }
    }
    rb.lower("timestamps_strictly_increasing", increasing ? 1.0 : 0.0, 1.0);
    rb.upper("clamped_input_within_level", max_sat, h + 1e-12);
    rb.upper("agent_speed_bound", max_speed_excess, 1e-12);
}

void check_event_rule(ReportBuilder& rb, const Trajectory& traj, const EventLog& log,
                      const Laplacian& L, const TriggerRule& rule, double h, Index p) {
    double max_budget_excess = -kInf;
    for (const auto& s : traj.samples) {
        MeasurementError me = measurement_errors(s, L, SaturationLevel(h));
        for (Index i = 0; i < me.e.rows(); ++i) {
            double excess = me.e.row(i).squaredNorm() - threshold(rule, i, s.t);
            max_budget_excess = std::max(max_budget_excess, excess);
        }
    }
    rb.upper("trigger_soundness", max_budget_excess, 1e-9);

    double min_gap_margin = kInf;
    bool first_at_zero = true;
    for (Index i = 0; i < log.agents(); ++i) {
        const auto& ts = log.times[static_cast<std::size_t>(i)];
        first_at_zero = first_at_zero && !ts.empty() && ts.front() == 0.0;
        for (std::size_t k = 1; k < ts.size(); ++k) {
            double gap = ts[k] - ts[k - 1];
            double bound = zeno_lower_bound(rule.alpha(i), rule.beta(i), p, h, ts[k]);
            min_gap_margin = std::min(min_gap_margin, gap - bound);
        }
    }
    rb.lower("zeno_inter_event_bound", min_gap_margin, -1e-9);
    rb.lower("first_trigger_at_zero", first_at_zero ? 1.0 : 0.0, 1.0);
}

/// Invariants of one strongly connected (sub)system along its trajectory.
void check_connected_system(ReportBuilder& rb, CertificateReport& report,
                            const std::string& prefix, const Trajectory& traj,
                            const Mat& Lmat, const SpectralData& spectral, double h,
                            bool continuous_mode, const TriggerRule* rule) {
    Laplacian L{Lmat, Lmat.diagonal()};
    double max_qi_gap = 0.0;
    double max_input_excess = -kInf;
    for (const auto& s : traj.samples) {
        max_qi_gap = std::max(max_qi_gap, qi_identity_gap(s.x, Lmat, spectral.xi, h));
        if (spectral.rho2_U > 0.0) {
            Mat u = -(Lmat * s.x);
            double lhs = u.squaredNorm();
            double rhs = 2.0 * (spectral.rho_LTL / spectral.rho2_U) *
                         eval_Vtilde(s.x, spectral.U);
            double scale = std::max(1.0, rhs);
            max_input_excess = std::max(max_input_excess, (lhs - rhs) / scale);
        }
    }
    rb.upper(prefix + "dissipation_identity", max_qi_gap, 1e-10);
    rb.upper(prefix + "input_norm_bound", max_input_excess, 1e-8);

    auto times = sample_times(traj);
    if (continuous_mode) {
        auto v = eval_V_series(traj, L, spectral.xi, SaturationLevel(h));
        rb.upper(prefix + "V_nonincreasing", max_forward_difference(times, v), 1e-6);

        DecayReport decay = decay_report(traj, spectral, SaturationLevel(h));
        auto vtilde = eval_Vtilde_series(traj, spectral.U);
        double ratio = max_decay_ratio(times, vtilde, decay.saturation_exit_time,
                                       decay.theory_rate);
        rb.upper(prefix + "post_exit_exponential_bound", ratio, 1.05);
        report.decay = decay;
    } else {
        auto w = eval_W_series(traj, L, spectral, *rule, SaturationLevel(h));
        double max_rise = -kInf;
        for (std::size_t k = 1; k < w.size(); ++k) {
            max_rise = std::max(max_rise, w[k] - w[k - 1]);
        }
        rb.upper(prefix + "W_nonincreasing", max_rise, 1e-6);
        report.decay.saturation_exit_time = saturation_exit_time(traj, SaturationLevel(h));
        report.decay.theory_rate = spectral.rho_U > 0.0 ? 2.0 * spectral.rho2_R / spectral.rho_U : 0.0;
        auto vtilde = eval_Vtilde_series(traj, spectral.U);
        DecayFit fit = fit_decay_envelope(times, vtilde, report.decay.saturation_exit_time);
        report.decay.fitted_rate = -fit.rate;
    }
}

}  // namespace

bool CertificateReport::all_pass() const {
    for (const auto& c : checks) {
        if (!c.pass) return false;
    }
    return true;
}

SimulationResult simulate_scenario(const Scenario& scenario) {
    if (!has_directed_spanning_tree(scenario.graph)) {
        throw NoSpanningTree("scenario graph has no directed spanning tree");
    }
    SimulationResult result;
    if (scenario.mode == RunMode::Continuous) {
        result.trajectory =
            run_continuous_simulation(scenario.graph, scenario.saturation(), scenario.x0,
                                      scenario.t_end, scenario.dt, scenario.sample_dt);
        result.summary.min_inter_event_gap = kInf;
    } else {
        EventOptions options;
        options.sample_dt = scenario.sample_dt;
        auto sim = run_event_simulation(scenario.graph, scenario.rule,
                                        scenario.saturation(), scenario.x0,
                                        scenario.t_end, options);
        result.trajectory = std::move(sim.trajectory);
        result.summary.total_events = sim.log.total_events();
        result.summary.min_inter_event_gap = sim.log.min_inter_event_gap();
        result.log = std::move(sim.log);
    }
    result.summary.final_consensus_error =
        consensus_error(result.trajectory.samples.back().x);
    try {
        result.summary.saturation_exit_time =
            saturation_exit_time(result.trajectory, scenario.saturation());
    } catch (const NeverExitsSaturation&) {
        result.summary.saturation_exit_time = std::nullopt;
    }
    return result;
}

CertificateReport verify_scenario(const Scenario& scenario, const SimulationResult& run) {
    CertificateReport report;
    ReportBuilder rb(report);
    const double h = scenario.h;
    const bool continuous = scenario.mode == RunMode::Continuous;
    Laplacian L = laplacian(scenario.graph);

    check_structural(rb, run.trajectory, h, scenario.p);
    rb.lower("saturation_exit_finite",
             run.summary.saturation_exit_time ? 1.0 : 0.0, 1.0);
    if (!continuous) {
        check_event_rule(rb, run.trajectory, *run.log, L, scenario.rule, h, scenario.p);
    }

    auto components = strongly_connected_components(scenario.graph);
    if (components.size() == 1) {
        SpectralData spectral = build_spectral(L.matrix);
        rb.from_certificates(spectral_certificates(L.matrix, spectral));
        check_connected_system(rb, report, "", run.trajectory, L.matrix, spectral, h,
                               continuous, continuous ? nullptr : &scenario.rule);
    } else {
        PFDecomposition pf = pf_decompose(L);
        BlockSpectralData blocks = build_block_spectral(pf);
        rb.from_certificates(block_certificates(pf, blocks));

        // The closed component is a self-contained strongly connected
        // system; its invariants certify exactly as in the irreducible case.
        const int M = pf.block_count();
        Trajectory closed = closed_block_trajectory(run.trajectory, pf);
        SpectralData closed_spectral = build_spectral(pf.diagonal_blocks[M - 1]);
        TriggerRule closed_rule;
        if (!continuous) closed_rule = restrict_rule(scenario.rule, pf);
        check_connected_system(rb, report, "closed_block_", closed,
                               pf.diagonal_blocks[M - 1], closed_spectral, h, continuous,
                               continuous ? nullptr : &closed_rule);

        BlockLyapunov bl(pf, blocks, scenario.saturation());
        bl.fit_leader_decay(run.trajectory);
        nlohmann::json diag;
        diag["conditioning_ratio"] = blocks.conditioning_ratio;
        diag["leader_input_envelope"] = {{"scale", bl.leader_input_fit().scale},
                                         {"rate", bl.leader_input_fit().rate}};
        if (!continuous) {
            diag["leader_broadcast_envelope"] = {
                {"scale", bl.leader_broadcast_fit().scale},
                {"rate", bl.leader_broadcast_fit().rate}};
        }
        auto first = bl.block_energies(run.trajectory.samples.front().x);
        auto last = bl.block_energies(run.trajectory.samples.back().x);
        diag["block_energies_initial"] = first;
        diag["block_energies_final"] = last;
        diag["composite_initial"] =
            continuous ? bl.eval_V3(run.trajectory.samples.front().x, 0.0)
                       : bl.eval_Wr(run.trajectory.samples.front().x, 0.0, scenario.rule);
        report.diagnostics = std::move(diag);
    }
    return report;
}

nlohmann::json analyze_scenario(const Scenario& scenario) {
    nlohmann::json out;
    const auto& g = scenario.graph;
    out["agents"] = g.size();
    out["edges"] = g.edge_count();
    out["has_spanning_tree"] = has_directed_spanning_tree(g);
    auto components = strongly_connected_components(g);
    out["components"] = components;
    out["strongly_connected"] = components.size() == 1;
    if (!out["has_spanning_tree"].get<bool>()) return out;

    Laplacian L = laplacian(g);
    if (components.size() == 1) {
        SpectralData s = build_spectral(L.matrix);
        nlohmann::json spec;
        spec["xi"] = std::vector<double>(s.xi.data(), s.xi.data() + s.xi.size());
        spec["rho_U"] = s.rho_U;
        spec["rho2_U"] = s.rho2_U;
        spec["rho2_R"] = s.rho2_R;
        spec["rho_LTL"] = s.rho_LTL;
        nlohmann::json certs = nlohmann::json::array();
        for (const auto& c : spectral_certificates(L.matrix, s)) {
            certs.push_back({{"name", c.name},
                             {"margin", c.margin},
                             {"tolerance", c.tolerance},
                             {"pass", c.pass}});
        }
        spec["certificates"] = std::move(certs);
        out["spectral"] = std::move(spec);
    } else {
        PFDecomposition pf = pf_decompose(L);
        BlockSpectralData b = build_block_spectral(pf);
        nlohmann::json blocks;
        blocks["permutation"] = pf.permutation;
        blocks["block_sizes"] = pf.block_sizes;
        nlohmann::json xis = nlohmann::json::array();
        for (const auto& xi : b.xi) {
            xis.push_back(std::vector<double>(xi.data(), xi.data() + xi.size()));
        }
        blocks["xi"] = std::move(xis);
        blocks["rho2_Q"] = b.rho2_Q;
        blocks["rho_U_last"] = b.rho_U_last;
        blocks["conditioning_ratio"] = b.conditioning_ratio;
        nlohmann::json weights = nlohmann::json::array();
        for (const auto& w : b.weights) {
            weights.push_back({{"d1", w.d1}, {"d2", w.d2}, {"d3", w.d3}, {"d4", w.d4}});
        }
        blocks["weights"] = std::move(weights);
        nlohmann::json certs = nlohmann::json::array();
        for (const auto& c : block_certificates(pf, b)) {
            certs.push_back({{"name", c.name},
                             {"margin", c.margin},
                             {"tolerance", c.tolerance},
                             {"pass", c.pass}});
        }
        blocks["certificates"] = std::move(certs);
        out["blocks"] = std::move(blocks);
    }
    return out;
}

nlohmann::json summary_json(const Scenario& scenario, const RunSummary& summary) {
    nlohmann::json out;
    out["scenario"] = scenario.name;
    out["mode"] = scenario.mode == RunMode::Continuous ? "continuous" : "event";
    out["agents"] = scenario.agents();
    out["t_end"] = scenario.t_end;
    out["final_consensus_error"] = summary.final_consensus_error;
    if (scenario.mode == RunMode::Event) {
        out["total_events"] = summary.total_events;
        out["min_inter_event_gap"] = summary.min_inter_event_gap;
    }
    if (summary.saturation_exit_time) {
        out["saturation_exit_time"] = *summary.saturation_exit_time;
    } else {
        out["saturation_exit_time"] = nullptr;
    }
    return out;
}

nlohmann::json certificate_json(const CertificateReport& report) {
    nlohmann::json out;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : report.checks) {
        checks.push_back(
            {{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"bound", c.bound}});
    }
    out["checks"] = std::move(checks);
    out["all_pass"] = report.all_pass();
    out["decay"] = {{"saturation_exit_time", report.decay.saturation_exit_time},
                    {"fitted_rate", report.decay.fitted_rate},
                    {"theory_rate", report.decay.theory_rate}};
    if (!report.diagnostics.is_null()) out["diagnostics"] = report.diagnostics;
    return out;
}

RunArtifacts write_run_artifacts(const Scenario& scenario, const SimulationResult& run,
                                 const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    RunArtifacts artifacts;
    artifacts.trajectory_csv = out_dir / (scenario.name + "_trajectory.csv");
    atomic_write(artifacts.trajectory_csv, trajectory_csv(run.trajectory));
    if (run.log) {
        artifacts.event_log_json = out_dir / (scenario.name + "_events.json");
        atomic_write(artifacts.event_log_json, event_log_json(*run.log));
        artifacts.event_log_csv = out_dir / (scenario.name + "_events.csv");
        atomic_write(artifacts.event_log_csv,
                     event_log_csv(*run.log, scenario.rule, scenario.p, scenario.h));
    }
    artifacts.summary_json_path = out_dir / (scenario.name + "_summary.json");
    atomic_write(artifacts.summary_json_path,
                 summary_json(scenario, run.summary).dump(2) + "\n");
    return artifacts;
}

}  // namespace satcon
