#include "satcon/dynamics.hpp"

#include <cmath>
#include <string>

namespace satcon {

namespace {

void check_dimensions(const Laplacian& L, const Mat& x) {
    if (x.rows() != L.size()) {
        throw DimensionMismatch("state has " + std::to_string(x.rows()) +
                                " rows, Laplacian expects " + std::to_string(L.size()));
    }
}

}  // namespace

Mat saturate(const Mat& s, SaturationLevel h) {
    if (!s.allFinite()) throw NonFiniteInput("saturate: input contains NaN/Inf");
    return saturate_expr(s, h.h);
}

Mat continuous_input(const Laplacian& L, const Mat& x) {
    check_dimensions(L, x);
    return -(L.matrix * x);
}

Mat event_input(const Laplacian& L, const Mat& xhat) {
    check_dimensions(L, xhat);
    return -(L.matrix * xhat);
}

SystemState step_continuous(const SystemState& state, const Laplacian& L,
                            SaturationLevel h, double dt) {
    if (!(dt > 0.0)) throw ValidationError("step_continuous: dt must be positive");
    const Mat& x = state.x;
    auto rhs = [&](const Mat& y) -> Mat { return saturate_expr(-(L.matrix * y), h.h); };
    Mat k1 = rhs(x);
    Mat k2 = rhs(x + 0.5 * dt * k1);
    Mat k3 = rhs(x + 0.5 * dt * k2);
    Mat k4 = rhs(x + dt * k3);
    SystemState next = state;
    next.t = state.t + dt;
    next.x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.x.allFinite()) throw NonFiniteState("state diverged during RK4 step");
    return next;
}

SystemState step_event_exact(const SystemState& state, const Laplacian& L,
                             SaturationLevel h, double dt_max) {
    if (!(dt_max >= 0.0)) throw ValidationError("step_event_exact: negative step");
    check_dimensions(L, state.xhat);
    SystemState next = state;
    next.t = state.t + dt_max;
    next.x = state.x + dt_max * saturate_expr(-(L.matrix * state.xhat), h.h);
    if (!next.x.allFinite()) throw NonFiniteState("state diverged during event step");
    return next;
}

double consensus_error(const Mat& x) {
    double worst = 0.0;
    for (Index i = 0; i < x.rows(); ++i) {
        for (Index j = i + 1; j < x.rows(); ++j) {
            worst = std::max(worst, (x.row(i) - x.row(j)).norm());
        }
    }
    return worst;
}

Trajectory run_continuous_simulation(const WeightedDigraph& g, SaturationLevel h,
                                     const Mat& x0, double t_end, double dt,
                                     double sample_dt) {
    if (!(t_end > 0.0)) throw ValidationError("t_end must be positive");
    if (!(dt > 0.0) || !(sample_dt > 0.0)) throw ValidationError("dt and sample_dt must be positive");
    if (!x0.allFinite()) throw NonFiniteInput("initial state contains NaN/Inf");

    Laplacian L = laplacian(g);
    check_dimensions(L, x0);

    const auto steps_per_sample =
        static_cast<long>(std::ceil(sample_dt / dt - 1e-12));
    const double dt_eff = sample_dt / static_cast<double>(steps_per_sample);
    const auto sample_count = static_cast<long>(std::floor(t_end / sample_dt + 1e-9));

    Trajectory traj;
    traj.sample_dt = sample_dt;
    traj.event_mode = false;
    traj.samples.reserve(static_cast<std::size_t>(sample_count) + 1);

    SystemState state;
    state.t = 0.0;
    state.x = x0;

    auto record = [&](const SystemState& s) {
        TrajectorySample sample;
        sample.t = s.t;
        sample.x = s.x;
        sample.u = continuous_input(L, s.x);
        sample.sat_u = saturate_expr(sample.u, h.h);
        traj.samples.push_back(std::move(sample));
    };

    record(state);
    for (long k = 1; k <= sample_count; ++k) {
        for (long s = 0; s < steps_per_sample; ++s) {
            state = step_continuous(state, L, h, dt_eff);
        }
        state.t = static_cast<double>(k) * sample_dt;  // keep the grid exact
        record(state);
    }
    return traj;
}

}  // namespace satcon
