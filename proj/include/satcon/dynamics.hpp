#pragma once

#include <vector>

#include "satcon/errors.hpp"
#include "satcon/graph.hpp"
#include "satcon/types.hpp"

namespace satcon {

/// Symmetric actuator bound. Inputs clamp componentwise to [-h, h].
struct SaturationLevel {
    double h;

    explicit SaturationLevel(double level) : h(level) {
        if (!(level > 0.0)) throw ValidationError("saturation level must be positive");
    }
};

/// Componentwise clamp to [-h, h]. Works on any dense Eigen expression.
template <typename Derived>
auto saturate_expr(const Eigen::MatrixBase<Derived>& s, double h) {
    return s.cwiseMin(h).cwiseMax(-h);
}

inline double saturate(double s, double h) {
    return s > h ? h : (s < -h ? -h : s);
}

/// Clamp with a finiteness check on the input.
Mat saturate(const Mat& s, SaturationLevel h);

/// Closed form of the running integral of the clamp,
/// \int_0^a sat_h(s) ds = a^2/2 inside the linear band, h|a| - h^2/2 outside.
inline double sat_integral(double a, double h) {
    double m = std::abs(a);
    return m <= h ? 0.5 * a * a : h * m - 0.5 * h * h;
}

/// Stacked agent states. Row i of x is agent i's state in R^p. In event
/// mode xhat carries the last broadcast value per agent; in continuous mode
/// it is empty.
struct SystemState {
    double t = 0.0;
    Mat x;
    Mat xhat;

    Index agents() const { return x.rows(); }
    Index dimension() const { return x.cols(); }
};

/// u_i = -sum_j L_ij x_j, one row per agent.
Mat continuous_input(const Laplacian& L, const Mat& x);

/// Same combination over last-broadcast values.
Mat event_input(const Laplacian& L, const Mat& xhat);

/// One classical fixed-step RK4 advance of xdot_i = sat_h(-sum_j L_ij x_j).
/// Fourth order away from the clamp surfaces, first order across them.
SystemState step_continuous(const SystemState& state, const Laplacian& L,
                            SaturationLevel h, double dt);

/// Exact advance when broadcasts are frozen: the input is constant, so each
/// agent moves linearly, x_i(t + d) = x_i(t) + d * sat_h(uhat_i). The caller
/// guarantees no trigger occurs inside the step.
SystemState step_event_exact(const SystemState& state, const Laplacian& L,
                             SaturationLevel h, double dt_max);

/// One time sample of a run: states, raw inputs (the combination actually
/// applied: -Lx in continuous mode, -L xhat in event mode), and their
/// clamped values. Event samples also carry the broadcast values.
struct TrajectorySample {
    double t = 0.0;
    Mat x;
    Mat u;
    Mat sat_u;
    Mat xhat;
};

struct Trajectory {
    double sample_dt = 0.01;
    bool event_mode = false;
    std::vector<TrajectorySample> samples;

    Index agents() const { return samples.empty() ? 0 : samples.front().x.rows(); }
    Index dimension() const { return samples.empty() ? 0 : samples.front().x.cols(); }
};

/// Max over agent pairs of ||x_i - x_j||.
double consensus_error(const Mat& x);

/// Fixed-step RK4 run of the continuous protocol, sampled every sample_dt.
/// dt is rounded down so that an integer number of steps fits one sample
/// interval. Throws NonFiniteState if the state leaves the finite range.
Trajectory run_continuous_simulation(const WeightedDigraph& g, SaturationLevel h,
                                     const Mat& x0, double t_end, double dt = 1e-3,
                                     double sample_dt = 0.01);

}  // namespace satcon
