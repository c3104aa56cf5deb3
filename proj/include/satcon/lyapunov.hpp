#pragma once

#include <vector>

#include "satcon/dynamics.hpp"
#include "satcon/event_engine.hpp"
#include "satcon/graph.hpp"
#include "satcon/spectral.hpp"
#include "satcon/types.hpp"

namespace satcon {

/// Energy of the saturated protocol:
/// V(x) = sum_i xi_i sum_l integral_0^{u_il} sat_h. Nonnegative, zero
/// exactly at consensus.
double eval_V(const Mat& x, const Laplacian& L, const Vec& xi, SaturationLevel h);

/// Quadratic disagreement (1/2) x^T (U kron I_p) x.
double eval_Vtilde(const Mat& x, const Mat& U);

/// Event-mode energy W = V + 4 max_i{xi_i L_ii} rho(L^T L) sum_i
/// (alpha_i/beta_i) exp(-beta_i t). Non-increasing along event-triggered
/// runs on strongly connected digraphs.
double eval_W(const Mat& x, double t, const Laplacian& L, const SpectralData& s,
              const TriggerRule& rule, SaturationLevel h);

/// Gap between the two algebraic routes to the weighted dissipation:
/// sum_i xi_i q_i versus sum_ij xi_i L_ij <sat(u_j), sat(u_i)>. Zero up to
/// rounding for any state.
double qi_identity_gap(const Mat& x, const Mat& L, const Vec& xi, double h);

/// Envelope scale * exp(-rate * t) covering a sampled nonnegative signal.
struct DecayFit {
    double scale = 0.0;
    double rate = 0.0;
};

/// Log-linear fit of a decaying signal: the rate comes from least squares
/// on log(values) over the last 80% of the window starting at t_from, the
/// scale is then lifted so the envelope covers every sample from t_from on.
DecayFit fit_decay_envelope(const std::vector<double>& times,
                            const std::vector<double>& values, double t_from);

/// Block energies and the composite certificates of the reducible case.
class BlockLyapunov {
public:
    BlockLyapunov(const PFDecomposition& pf, const BlockSpectralData& spectral,
                  SaturationLevel h);

    /// Per-block energies V_m of a state given in original agent order.
    /// Block inputs include the coupling to later blocks.
    std::vector<double> block_energies(const Mat& x) const;

    /// Fits the decay envelopes of the aggregated leader component's
    /// squared input norm (raw and broadcast-based) from a finished run.
    /// Required before eval_V3 / eval_Wr.
    void fit_leader_decay(const Trajectory& trajectory);
    bool decay_fitted() const { return fitted_; }

    const DecayFit& leader_input_fit() const { return input_fit_; }
    const DecayFit& leader_broadcast_fit() const { return broadcast_fit_; }

    /// Composite V3 = V_1 + V_2 + fitted coupling term (continuous mode).
    double eval_V3(const Mat& x, double t) const;

    /// Composite W_r with the auxiliary exponential states (event mode).
    /// The rule is given in original agent order.
    double eval_Wr(const Mat& x, double t, const TriggerRule& rule) const;

private:
    const PFDecomposition& pf_;
    const BlockSpectralData& spectral_;
    double h_;
    bool fitted_ = false;
    DecayFit input_fit_;      // ||u of leader||^2 envelope
    DecayFit broadcast_fit_;  // ||uhat of leader||^2 envelope
};

/// Measured replacement for the existential constants of the convergence
/// argument: when the clamp stopped mattering and how fast the
/// disagreement actually decayed afterwards.
struct DecayReport {
    double saturation_exit_time = 0.0;
    double fitted_rate = 0.0;  ///< slope of log Vtilde, <= 0
    double theory_rate = 0.0;  ///< 2 rho2(R) / rho(U)
};

/// Scans a run for the first sample after which every raw input component
/// stays inside [-h, h], then fits the post-exit decay of Vtilde. Throws
/// NeverExitsSaturation when the clamp is still active at the end.
DecayReport decay_report(const Trajectory& trajectory, const SpectralData& s,
                         SaturationLevel h);

/// First sample time after which max|u| <= h holds through the end.
double saturation_exit_time(const Trajectory& trajectory, SaturationLevel h);

/// Restriction of a run to the closed component: rows of x, u, sat_u (and
/// xhat) for the final block's agents. Self-contained because that block
/// receives no outside information.
Trajectory closed_block_trajectory(const Trajectory& trajectory,
                                   const PFDecomposition& pf);

/// Series evaluation over all samples.
std::vector<double> eval_V_series(const Trajectory& t, const Laplacian& L, const Vec& xi,
                                  SaturationLevel h);
std::vector<double> eval_Vtilde_series(const Trajectory& t, const Mat& U);
std::vector<double> eval_W_series(const Trajectory& t, const Laplacian& L,
                                  const SpectralData& s, const TriggerRule& rule,
                                  SaturationLevel h);

/// Max forward difference quotient (v[k+1]-v[k]) / (t[k+1]-t[k]).
double max_forward_difference(const std::vector<double>& times,
                              const std::vector<double>& values);

/// Max over post-exit samples of value(t) / (value(exit) e^{-rate (t-exit)}).
double max_decay_ratio(const std::vector<double>& times,
                       const std::vector<double>& values, double exit_time, double rate);

}  // namespace satcon
