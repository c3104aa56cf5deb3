#include "satcon/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "satcon/errors.hpp"

namespace satcon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double weighted_sat_integral(const Mat& u, const Vec& xi, double h) {
    double total = 0.0;
    for (Index i = 0; i < u.rows(); ++i) {
        double inner = 0.0;
        for (Index l = 0; l < u.cols(); ++l) inner += sat_integral(u(i, l), h);
        total += xi(i) * inner;
    }
    return total;
}

}  // namespace

double eval_V(const Mat& x, const Laplacian& L, const Vec& xi, SaturationLevel h) {
    if (xi.size() != L.size()) throw DimensionMismatch("xi size does not match Laplacian");
    Mat u = continuous_input(L, x);
    return weighted_sat_integral(u, xi, h.h);
}

double eval_Vtilde(const Mat& x, const Mat& U) {
    if (x.rows() != U.rows()) throw DimensionMismatch("state does not match U");
    return 0.5 * (x.transpose() * U * x).trace();
}

double eval_W(const Mat& x, double t, const Laplacian& L, const SpectralData& s,
              const TriggerRule& rule, SaturationLevel h) {
    double max_xi_deg = (s.xi.array() * L.matrix.diagonal().array()).maxCoeff();
    double aux = (rule.alpha.array() / rule.beta.array() * (-rule.beta.array() * t).exp())
                     .sum();
    return eval_V(x, L, s.xi, h) + 4.0 * max_xi_deg * s.rho_LTL * aux;
}

double qi_identity_gap(const Mat& x, const Mat& L, const Vec& xi, double h) {
    Mat sat_u = saturate_expr(-(L * x), h);
    const Index n = x.rows();
    double pairwise = 0.0;
    for (Index i = 0; i < n; ++i) {
        double qi = 0.0;
        for (Index j = 0; j < n; ++j) {
            qi += L(i, j) * (sat_u.row(j) - sat_u.row(i)).squaredNorm();
        }
        pairwise += xi(i) * (-0.5) * qi;
    }
    double direct = 0.0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            direct += xi(i) * L(i, j) * sat_u.row(j).dot(sat_u.row(i));
        }
    }
    return std::abs(pairwise - direct);
}

DecayFit fit_decay_envelope(const std::vector<double>& times,
                            const std::vector<double>& values, double t_from) {
    // Collect the fit window: last 80% of the span starting at t_from.
    std::vector<std::size_t> window;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] >= t_from) window.push_back(k);
    }
    if (!window.empty()) {
        std::size_t skip = window.size() / 5;
        window.erase(window.begin(), window.begin() + static_cast<long>(skip));
    }

    DecayFit fit;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t k : window) {
        if (values[k] <= 1e-300) continue;  // flat zero tail carries no slope
        double lx = times[k], ly = std::log(values[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    if (m >= 2) {
        double denom = static_cast<double>(m) * sxx - sx * sx;
        if (denom > 0.0) fit.rate = -((static_cast<double>(m) * sxy - sx * sy) / denom);
    }
    fit.rate = std::max(fit.rate, 0.0);

    // Lift the scale so the envelope covers every sample from t_from on.
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] < t_from) continue;
        fit.scale = std::max(fit.scale, values[k] * std::exp(fit.rate * times[k]));
    }
    return fit;
}

BlockLyapunov::BlockLyapunov(const PFDecomposition& pf, const BlockSpectralData& spectral,
                             SaturationLevel h)
    : pf_(pf), spectral_(spectral), h_(h.h) {}

std::vector<double> BlockLyapunov::block_energies(const Mat& x) const {
    Mat xp = pf_.permute(x);
    Mat u = -(pf_.permuted * xp);
    std::vector<double> energies;
    for (int m = 0; m < pf_.block_count(); ++m) {
        Mat block_u = u.middleRows(pf_.offsets[m], pf_.block_sizes[m]);
        energies.push_back(weighted_sat_integral(block_u, spectral_.xi[m], h_));
    }
    return energies;
}

void BlockLyapunov::fit_leader_decay(const Trajectory& trajectory) {
    const Index lead_off = pf_.offsets[pf_.block_count() - 1];
    const Index lead_n = pf_.block_sizes[pf_.block_count() - 1];
    std::vector<double> times, raw, broadcast;
    for (const auto& s : trajectory.samples) {
        times.push_back(s.t);
        Mat xp = pf_.permute(s.x);
        Mat u = -(pf_.permuted * xp);
        raw.push_back(u.bottomRows(lead_n).squaredNorm());
        if (s.xhat.size() != 0) {
            Mat xhp = pf_.permute(s.xhat);
            Mat uhat = -(pf_.permuted * xhp);
            broadcast.push_back(uhat.bottomRows(lead_n).squaredNorm());
        }
    }
    (void)lead_off;
    input_fit_ = fit_decay_envelope(times, raw, 0.0);
    broadcast_fit_ =
        broadcast.empty() ? input_fit_ : fit_decay_envelope(times, broadcast, 0.0);
    fitted_ = true;
}

double BlockLyapunov::eval_V3(const Mat& x, double t) const {
    if (!fitted_) throw RequiresDecayFit("eval_V3 needs fit_leader_decay first");
    const int M = pf_.block_count();
    if (M < 2) throw ValidationError("composite energies need at least two blocks");
    auto energies = block_energies(x);
    double sum_v = 0.0;
    for (double v : energies) sum_v += v;

    const Index n = pf_.permuted.rows();
    const Index n1 = pf_.block_sizes[0];
    const Index n_agg = n - pf_.offsets[1];
    double max_coupling_sq =
        pf_.permuted.block(0, pf_.offsets[1], n1, n_agg).array().square().maxCoeff();
    double rho2_Q1 = spectral_.rho2_Q[0];
    const DecayFit& f = input_fit_;
    if (f.rate <= 0.0 || f.scale <= 0.0) return sum_v;  // leader already at rest
    double coeff = 2.0 * static_cast<double>(n1) * static_cast<double>(n_agg) *
                   max_coupling_sq * f.scale /
                   (2.0 * rho2_Q1 * f.rate * static_cast<double>(n));
    return sum_v + coeff * static_cast<double>(n) * std::exp(-f.rate * t);
}

double BlockLyapunov::eval_Wr(const Mat& x, double t, const TriggerRule& rule) const {
    if (!fitted_) throw RequiresDecayFit("eval_Wr needs fit_leader_decay first");
    const int M = pf_.block_count();
    if (M < 2) throw ValidationError("composite energies need at least two blocks");
    auto energies = block_energies(x);
    double sum_v = 0.0;
    for (double v : energies) sum_v += v;

    const auto& w = spectral_.weights[0];
    const Index n = pf_.permuted.rows();
    const Index n1 = pf_.block_sizes[0];
    const Index n_agg = n - pf_.offsets[1];

    // Rule parameters in permuted order; follower block first.
    double eta_terms = 0.0;
    for (Index k = 0; k < n; ++k) {
        Index agent = pf_.permutation[static_cast<std::size_t>(k)];
        double a = rule.alpha(agent), b = rule.beta(agent);
        double coeff = k < n1 ? w.d4 : (w.d1 + w.d4);
        eta_terms += 2.0 * coeff * a / b * std::exp(-b * t);
    }

    const DecayFit& f = broadcast_fit_;
    double theta_term = 0.0;
    if (f.rate > 0.0 && f.scale > 0.0) {
        theta_term = 2.0 * (f.scale / f.rate) * w.d3 * static_cast<double>(n_agg) *
                     std::exp(-f.rate * t);
    }
    return sum_v + theta_term + eta_terms;
}

double saturation_exit_time(const Trajectory& trajectory, SaturationLevel h) {
    const auto& samples = trajectory.samples;
    long last_active = -1;
    for (long k = static_cast<long>(samples.size()) - 1; k >= 0; --k) {
        if (samples[static_cast<std::size_t>(k)].u.cwiseAbs().maxCoeff() > h.h) {
            last_active = k;
            break;
        }
    }
    if (last_active < 0) return samples.empty() ? 0.0 : samples.front().t;
    if (last_active + 1 >= static_cast<long>(samples.size())) {
        throw NeverExitsSaturation("inputs still saturate at the final sample");
    }
    return samples[static_cast<std::size_t>(last_active + 1)].t;
}

DecayReport decay_report(const Trajectory& trajectory, const SpectralData& s,
                         SaturationLevel h) {
    DecayReport report;
    report.saturation_exit_time = saturation_exit_time(trajectory, h);
    report.theory_rate = s.rho_U > 0.0 ? 2.0 * s.rho2_R / s.rho_U : 0.0;

    std::vector<double> times, vtilde;
    for (const auto& sample : trajectory.samples) {
        times.push_back(sample.t);
        vtilde.push_back(eval_Vtilde(sample.x, s.U));
    }
    DecayFit fit = fit_decay_envelope(times, vtilde, report.saturation_exit_time);
    report.fitted_rate = -fit.rate;
    return report;
}

Trajectory closed_block_trajectory(const Trajectory& trajectory,
                                   const PFDecomposition& pf) {
    const int M = pf.block_count();
    const Index nM = pf.block_sizes[M - 1];
    std::vector<Index> rows;
    for (Index k = pf.offsets[M - 1]; k < pf.offsets[M]; ++k) {
        rows.push_back(pf.permutation[static_cast<std::size_t>(k)]);
    }
    Trajectory out;
    out.sample_dt = trajectory.sample_dt;
    out.event_mode = trajectory.event_mode;
    out.samples.reserve(trajectory.samples.size());
    for (const auto& s : trajectory.samples) {
        TrajectorySample sub;
        sub.t = s.t;
        sub.x.resize(nM, s.x.cols());
        sub.u.resize(nM, s.u.cols());
        sub.sat_u.resize(nM, s.sat_u.cols());
        if (s.xhat.size() != 0) sub.xhat.resize(nM, s.xhat.cols());
        for (Index r = 0; r < nM; ++r) {
            sub.x.row(r) = s.x.row(rows[static_cast<std::size_t>(r)]);
            sub.u.row(r) = s.u.row(rows[static_cast<std::size_t>(r)]);
            sub.sat_u.row(r) = s.sat_u.row(rows[static_cast<std::size_t>(r)]);
            if (s.xhat.size() != 0) {
                sub.xhat.row(r) = s.xhat.row(rows[static_cast<std::size_t>(r)]);
            }
        }
        out.samples.push_back(std::move(sub));
    }
    return out;
}

std::vector<double> eval_V_series(const Trajectory& t, const Laplacian& L, const Vec& xi,
                                  SaturationLevel h) {
    std::vector<double> out;
    out.reserve(t.samples.size());
    for (const auto& s : t.samples) out.push_back(eval_V(s.x, L, xi, h));
    return out;
}

std::vector<double> eval_Vtilde_series(const Trajectory& t, const Mat& U) {
    std::vector<double> out;
    out.reserve(t.samples.size());
    for (const auto& s : t.samples) out.push_back(eval_Vtilde(s.x, U));
    return out;
}

std::vector<double> eval_W_series(const Trajectory& t, const Laplacian& L,
                                  const SpectralData& s, const TriggerRule& rule,
                                  SaturationLevel h) {
    std::vector<double> out;
    out.reserve(t.samples.size());
    for (const auto& sample : t.samples) {
        out.push_back(eval_W(sample.x, sample.t, L, s, rule, h));
    }
    return out;
}

double max_forward_difference(const std::vector<double>& times,
                              const std::vector<double>& values) {
    double worst = -kInf;
    for (std::size_t k = 1; k < values.size(); ++k) {
        double dt = times[k] - times[k - 1];
        if (dt > 0.0) worst = std::max(worst, (values[k] - values[k - 1]) / dt);
    }
    return worst;
}

double max_decay_ratio(const std::vector<double>& times,
                       const std::vector<double>& values, double exit_time, double rate) {
    std::size_t start = 0;
    while (start < times.size() && times[start] < exit_time - 1e-12) ++start;
    if (start >= times.size()) return 0.0;
    double v0 = values[start];
    double worst = 0.0;
    for (std::size_t k = start; k < times.size(); ++k) {
        double bound = v0 * std::exp(-rate * (times[k] - exit_time));
        if (bound <= 0.0) {
            if (values[k] > 0.0) return kInf;
            continue;
        }
        worst = std::max(worst, values[k] / bound);
    }
    return worst;
}

}  // namespace satcon
