#include "satcon/event_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "satcon/errors.hpp"

namespace satcon {

namespace {

constexpr double kRootTolerance = 1e-10;
constexpr double kTimeTieEps = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

/// f(d) = A + 2 B d + C d^2 - g0 exp(-beta d), the violation margin of the
/// triggering condition d seconds into the current linear segment.
struct ViolationCurve {
    double A, B, C, g0, beta;

    double value(double d) const {
        return A + 2.0 * B * d + C * d * d - g0 * std::exp(-beta * d);
    }
    double slope(double d) const {
        return 2.0 * B + 2.0 * C * d + beta * g0 * std::exp(-beta * d);
    }
};

double bisect(const ViolationCurve& f, double lo, double hi) {
    // f(lo) <= 0 < f(hi)
    for (int it = 0; it < 200 && hi - lo > kRootTolerance; ++it) {
        double mid = 0.5 * (lo + hi);
        (f.value(mid) > 0.0 ? hi : lo) = mid;
    }
    if (hi - lo > 10.0 * kRootTolerance) {
        throw BracketFailure("threshold-crossing bisection failed to converge");
    }
    return 0.5 * (lo + hi);
}

double bisect_slope_root(const ViolationCurve& f, double lo, double hi) {
    // f.slope changes sign on [lo, hi]
    bool rising = f.slope(hi) > 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
        double mid = 0.5 * (lo + hi);
        if ((f.slope(mid) > 0.0) == rising) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TriggerRule TriggerRule::uniform(Index n, double alpha, double beta) {
    TriggerRule rule;
    rule.alpha = Vec::Constant(n, alpha);
    rule.beta = Vec::Constant(n, beta);
    rule.validate(n);
    return rule;
}

void TriggerRule::validate(Index n) const {
    if (alpha.size() != n || beta.size() != n) {
        throw DimensionMismatch("trigger rule needs one (alpha, beta) pair per agent");
    }
    if (!(alpha.minCoeff() > 0.0) || !(beta.minCoeff() > 0.0)) {
        throw ValidationError("trigger rule parameters must be positive");
    }
}

Index EventLog::total_events() const {
    Index total = 0;
    for (const auto& ts : times) total += static_cast<Index>(ts.size());
    return total;
}

double EventLog::min_inter_event_gap() const {
    double best = kInf;
    for (const auto& ts : times) {
        for (std::size_t k = 1; k < ts.size(); ++k) best = std::min(best, ts[k] - ts[k - 1]);
    }
    return best;
}

std::optional<double> first_threshold_crossing(const Vec& e0, const Vec& drift,
                                               double alpha, double beta, double t0,
                                               double t_limit) {
    const double T = t_limit - t0;
    if (!(T > 0.0)) return std::nullopt;

    ViolationCurve f{e0.squaredNorm(), e0.dot(drift), drift.squaredNorm(),
                     alpha * std::exp(-beta * t0), beta};

    if (f.value(0.0) >= 0.0) return t0;  // already at/over budget

    // The curve's second derivative 2C - beta^2 g0 exp(-beta d) increases in
    // d, so f' is V-shaped: decreasing then increasing, with the switch at
    // d2 below. Slope roots split [0, T] into at most three monotonic pieces.
    double pieces[4] = {0.0, T, T, T};
    int cut = 1;
    auto add_cut = [&](double d) {
        pieces[cut] = d;
        pieces[cut + 1] = T;
        ++cut;
    };

    const double curv0 = 2.0 * f.C - beta * beta * f.g0;
    double d2 = 0.0;  // where f'' crosses zero
    bool has_d2 = false;
    if (curv0 < 0.0 && f.C > 0.0) {
        d2 = -std::log(2.0 * f.C / (beta * beta * f.g0)) / beta;
        has_d2 = d2 > 0.0 && d2 < T;
    }
    const bool convex_everywhere = curv0 >= 0.0;
    if (convex_everywhere) {
        // f' increasing on [0, T]
        if (f.slope(0.0) < 0.0 && f.slope(T) > 0.0) add_cut(bisect_slope_root(f, 0.0, T));
    } else if (!has_d2) {
        // f' decreasing on [0, T] (or C == 0 with curvature negative whole way)
        if (f.slope(0.0) > 0.0 && f.slope(T) < 0.0) add_cut(bisect_slope_root(f, 0.0, T));
    } else {
        if (f.slope(0.0) > 0.0 && f.slope(d2) < 0.0) add_cut(bisect_slope_root(f, 0.0, d2));
        if (f.slope(d2) < 0.0 && f.slope(T) > 0.0) add_cut(bisect_slope_root(f, d2, T));
    }

    for (int k = 0; k + 1 <= cut; ++k) {
        double a = pieces[k];
        double b = pieces[k + 1];
        if (b <= a) continue;
        if (f.value(a) >= 0.0) return t0 + a;
        if (f.value(b) > 0.0) return t0 + bisect(f, a, b);
    }
    return std::nullopt;
}

std::optional<double> next_trigger_time(const SystemState& state, Index i,
                                        const TriggerRule& rule, SaturationLevel h,
                                        const Laplacian& L, double t_limit) {
    rule.validate(state.agents());
    Mat uhat = event_input(L, state.xhat);
    Vec slope = saturate_expr(uhat.row(i), h.h).transpose();
    Vec e0 = (state.xhat.row(i) - state.x.row(i)).transpose();
    return first_threshold_crossing(e0, -slope, rule.alpha(i), rule.beta(i), state.t,
                                    t_limit);
}

namespace {

class EventLoop {
public:
    EventLoop(const WeightedDigraph& g, const TriggerRule& rule, SaturationLevel h,
              const Mat& x0, double t_end, const EventOptions& options)
        : L_(laplacian(g)),
          rule_(rule),
          h_(h),
          t_end_(t_end),
          options_(options),
          n_(x0.rows()),
          p_(x0.cols()),
          x_(x0),
          xhat_(x0),
          slopes_(Mat::Zero(n_, p_)),
          candidates_(n_, kInf) {
        if (!(t_end > 0.0)) throw ValidationError("t_end must be positive");
        if (!x0.allFinite()) throw NonFiniteInput("initial state contains NaN/Inf");
        rule_.validate(n_);
        result_.trajectory.sample_dt = options.sample_dt;
        result_.trajectory.event_mode = true;
        result_.log.times.resize(static_cast<std::size_t>(n_));
        result_.log.broadcasts.resize(static_cast<std::size_t>(n_));
    }

    EventSimulation run() {
        // Every agent broadcasts at t = 0.
        for (Index i = 0; i < n_; ++i) log_trigger(i);
        refresh_slopes();
        for (Index i = 0; i < n_; ++i) refresh_candidate(i);
        emit_sample();

        while (t_ < t_end_) {
            double t_next = *std::min_element(candidates_.begin(), candidates_.end());
            if (t_next >= t_end_) {
                advance_to(t_end_);
                emit_due_samples();
                break;
            }
            advance_to(t_next);
            process_triggers_at(t_next);
            emit_due_samples();
        }
        return std::move(result_);
    }

private:
    void refresh_slopes() { slopes_ = saturate_expr(-(L_.matrix * xhat_), h_.h); }

    void refresh_candidate(Index i) {
        Vec e0 = (xhat_.row(i) - x_.row(i)).transpose();
        Vec drift = -slopes_.row(i).transpose();
        auto hit = first_threshold_crossing(e0, drift, rule_.alpha(i), rule_.beta(i), t_,
                                            t_end_);
        candidates_[static_cast<std::size_t>(i)] = hit.value_or(kInf);
    }

    void log_trigger(Index i) {
        auto& ts = result_.log.times[static_cast<std::size_t>(i)];
        if (!ts.empty() && !(t_ > ts.back())) {
            throw BracketFailure("trigger times for one agent must strictly increase");
        }
        ts.push_back(t_);
        result_.log.broadcasts[static_cast<std::size_t>(i)].push_back(
            x_.row(i).transpose());
        xhat_.row(i) = x_.row(i);
        if (++event_count_ > options_.event_cap) {
            throw ZenoSuspected("event count exceeded cap of " +
                                std::to_string(options_.event_cap));
        }
    }

    /// Move the whole system linearly to t_target, emitting samples that
    /// fall strictly before it. Samples coinciding with t_target are left
    /// to emit_due_samples so they see post-broadcast values.
    void advance_to(double t_target) {
        emit_pending_samples_before(t_target);
        double dt = t_target - t_;
        if (dt > 0.0) {
            x_ += dt * slopes_;
            if (!x_.allFinite()) throw NonFiniteState("state diverged in event loop");
        }
        t_ = t_target;
    }

    void emit_pending_samples_before(double t_target) {
        while (next_sample_ * options_.sample_dt < t_target - kTimeTieEps) {
            double ts = next_sample_ * options_.sample_dt;
            if (ts > t_end_ + kTimeTieEps) return;
            double dt = ts - t_;
            if (dt > 0.0) {
                x_ += dt * slopes_;
                t_ = ts;
            }
            emit_sample();
        }
    }

    void emit_due_samples() {
        while (next_sample_ * options_.sample_dt <= t_ + kTimeTieEps) {
            emit_sample();
        }
    }

    void emit_sample() {
        TrajectorySample s;
        s.t = next_sample_ * options_.sample_dt;
        s.x = x_;
        s.u = -(L_.matrix * xhat_);
        s.sat_u = saturate_expr(s.u, h_.h);
        s.xhat = xhat_;
        result_.trajectory.samples.push_back(std::move(s));
        ++next_sample_;
    }

    void process_triggers_at(double t_event) {
        std::vector<Index> batch;
        for (Index i = 0; i < n_; ++i) {
            if (candidates_[static_cast<std::size_t>(i)] == t_event) batch.push_back(i);
        }
        for (Index i : batch) log_trigger(i);

        // Broadcasts change uhat_j wherever L(j, i) is nonzero; those agents'
        // error dynamics (and the senders' own, via the reset) need fresh
        // candidates. Everyone else's extrapolation stays exact.
        std::vector<bool> affected(static_cast<std::size_t>(n_), false);
        for (Index i : batch) {
            affected[static_cast<std::size_t>(i)] = true;
            for (Index j = 0; j < n_; ++j) {
                if (std::abs(L_.matrix(j, i)) > kEdgeWeightFloor) {
                    affected[static_cast<std::size_t>(j)] = true;
                }
            }
        }
        refresh_slopes();
        for (Index j = 0; j < n_; ++j) {
            if (affected[static_cast<std::size_t>(j)]) refresh_candidate(j);
        }
    }

    Laplacian L_;
    TriggerRule rule_;
    SaturationLevel h_;
    double t_end_;
    EventOptions options_;
    Index n_, p_;

    double t_ = 0.0;
    Mat x_, xhat_, slopes_;
    std::vector<double> candidates_;
    long next_sample_ = 0;
    Index event_count_ = 0;
    EventSimulation result_;
};

}  // namespace

EventSimulation run_event_simulation(const WeightedDigraph& g, const TriggerRule& rule,
                                     SaturationLevel h, const Mat& x0, double t_end,
                                     const EventOptions& options) {
    EventLoop loop(g, rule, h, x0, t_end, options);
    return loop.run();
}

MeasurementError measurement_errors(const TrajectorySample& sample, const Laplacian& L,
                                    SaturationLevel h) {
    if (sample.xhat.size() == 0) {
        throw ValidationError("measurement_errors needs an event-mode sample");
    }
    MeasurementError me;
    me.e = sample.xhat - sample.x;
    Mat u = -(L.matrix * sample.x);
    Mat uhat = -(L.matrix * sample.xhat);
    me.f = saturate_expr(uhat, h.h) - saturate_expr(u, h.h);
    return me;
}

}  // namespace satcon
