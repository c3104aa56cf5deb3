#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "satcon/dynamics.hpp"
#include "satcon/errors.hpp"
#include "test_helpers.hpp"

using namespace satcon;
using Catch::Approx;

namespace {

/// Simpson quadrature oracle for the clamp integral, independent of the
/// closed form.
double sat_integral_quadrature(double a, double h, int panels = 20000) {
    double total = 0.0;
    double dx = a / panels;
    for (int k = 0; k < panels; ++k) {
        double x0 = k * dx, x1 = (k + 1) * dx, xm = 0.5 * (x0 + x1);
        total += dx / 6.0 * (saturate(x0, h) + 4.0 * saturate(xm, h) + saturate(x1, h));
    }
    return total;
}

Laplacian toy_symmetric() {
    Mat a(2, 2);
    a << 0, 1, 1, 0;
    return laplacian(build_graph(a));
}

}  // namespace

TEST_CASE("saturation clamps componentwise", "[dynamics]") {
    Mat s(3, 1);
    s << 11, -3, -15;
    Mat clamped = saturate(s, SaturationLevel(10));
    CHECK(clamped(0, 0) == 10.0);
    CHECK(clamped(1, 0) == -3.0);
    CHECK(clamped(2, 0) == -10.0);

    CHECK(saturate(Mat::Zero(4, 2), SaturationLevel(3)).isZero(0.0));

    Mat inside = 0.9 * Mat::Random(5, 3);
    CHECK(saturate(inside, SaturationLevel(1)) == inside);
    // idempotent
    CHECK(saturate(clamped, SaturationLevel(10)) == clamped);

    Mat bad(1, 1);
    bad << std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(saturate(bad, SaturationLevel(1)), NonFiniteInput);
    CHECK_THROWS_AS(SaturationLevel(0.0), ValidationError);
}

TEST_CASE("clamp integral matches quadrature", "[dynamics]") {
    std::mt19937 rng(201);
    std::uniform_real_distribution<double> as(-30.0, 30.0), hs(0.1, 12.0);
    for (int k = 0; k < 200; ++k) {
        double a = as(rng), h = hs(rng);
        CHECK(sat_integral(a, h) == Approx(sat_integral_quadrature(a, h)).margin(1e-9));
    }
    CHECK(sat_integral(0.0, 1.0) == 0.0);
}

TEST_CASE("clamp inequalities hold on random inputs", "[dynamics]") {
    std::mt19937 rng(202);
    std::uniform_real_distribution<double> vals(-50.0, 50.0), hs(0.05, 20.0);
    for (int k = 0; k < 10'000; ++k) {
        double a = vals(rng), b = vals(rng), h = hs(rng);
        double integral = sat_integral(a, h);
        CHECK(0.5 * a * a >= integral);
        double sa = saturate(a, h), sb = saturate(b, h);
        CHECK(integral >= 0.5 * sa * sa);
        CHECK((a - b) * (a - b) >= (sa - sb) * (sa - sb));
    }
}

TEST_CASE("protocol inputs", "[dynamics]") {
    Laplacian L = toy_symmetric();
    SECTION("consensus gives zero input") {
        Mat x = Mat::Constant(2, 1, 3.5);
        CHECK(continuous_input(L, x).cwiseAbs().maxCoeff() < 1e-14);
    }
    SECTION("2-agent direct arithmetic") {
        Mat x(2, 1);
        x << 0, 2;
        Mat u = continuous_input(L, x);
        CHECK(u(0, 0) == 2.0);
        CHECK(u(1, 0) == -2.0);
    }
    SECTION("benchmark input matches a manual row-sum oracle") {
        Laplacian Lb =
            laplacian(build_graph(testutil::adjacency_of(testutil::benchmark_laplacian())));
        Mat x0 = testutil::benchmark_x0();
        Mat u = continuous_input(Lb, x0);
        for (Index i = 0; i < 7; ++i) {
            double expect = 0.0;
            for (Index j = 0; j < 7; ++j) expect -= Lb.matrix(i, j) * x0(j, 0);
            CHECK(u(i, 0) == Approx(expect).margin(1e-12));
        }
    }
    SECTION("broadcast input coincides when broadcasts are fresh") {
        Mat x = Mat::Random(2, 3);
        CHECK(event_input(L, x) == continuous_input(L, x));
        CHECK(event_input(L, Mat::Constant(2, 3, 1.25)).cwiseAbs().maxCoeff() < 1e-14);
    }
    SECTION("dimension mismatch") {
        CHECK_THROWS_AS(continuous_input(L, Mat::Zero(3, 1)), DimensionMismatch);
    }
}

TEST_CASE("continuous step behaviour", "[dynamics]") {
    SECTION("consensus is an exact fixed point on integer weights") {
        Mat a(2, 2);
        a << 0, 2, 1, 0;
        Laplacian L = laplacian(build_graph(a));
        SystemState state;
        state.x = Mat::Constant(2, 1, 4.0);
        SystemState next = step_continuous(state, L, SaturationLevel(10), 1e-2);
        CHECK(next.x == state.x);
    }
    SECTION("single agent never moves") {
        Laplacian L = laplacian(build_graph(Mat::Zero(1, 1)));
        SystemState state;
        state.x = Mat::Constant(1, 1, -2.0);
        CHECK(step_continuous(state, L, SaturationLevel(1), 0.1).x == state.x);
    }
    SECTION("symmetric pair conserves the mean while unsaturated") {
        Laplacian L = toy_symmetric();
        SystemState state;
        state.x = Mat(2, 1);
        state.x << 0.0, 2.0;  // inputs start at +-2, inside h = 10
        double mean0 = state.x.sum();
        for (int k = 0; k < 1000; ++k) {
            state = step_continuous(state, L, SaturationLevel(10), 1e-3);
        }
        CHECK(std::abs(state.x.sum() - mean0) < 1e-12);
        // closed form: difference decays at rate 2
        double diff = state.x(1, 0) - state.x(0, 0);
        CHECK(diff == Approx(2.0 * std::exp(-2.0 * 1.0)).margin(1e-9));
    }
}

TEST_CASE("event step advances linearly", "[dynamics]") {
    Mat a(2, 2);
    a << 0, 2, 1, 0;
    Laplacian L = laplacian(build_graph(a));

    SECTION("zero broadcast input keeps the state") {
        SystemState state;
        state.x = Mat::Random(2, 1);
        state.xhat = Mat::Constant(2, 1, 1.0);
        CHECK(step_event_exact(state, L, SaturationLevel(10), 0.25).x == state.x);
    }
    SECTION("clamped drift: uhat = 15, h = 10, step 0.1 moves exactly 1.0") {
        Mat a2 = Mat::Zero(2, 2);
        a2(0, 1) = 1.0;
        a2(1, 0) = 1.0;
        Laplacian L2 = laplacian(build_graph(a2));
        SystemState state;
        state.x = Mat::Zero(2, 1);
        state.xhat = Mat(2, 1);
        state.xhat << 0.0, 15.0;  // uhat = (15, -15), both clamped
        SystemState next = step_event_exact(state, L2, SaturationLevel(10), 0.1);
        CHECK(next.x(0, 0) == 1.0);
        CHECK(next.x(1, 0) == -1.0);
    }
    SECTION("half steps compose exactly on dyadic data") {
        SystemState state;
        state.x = Mat(2, 1);
        state.x << 1.0, -2.0;
        state.xhat = Mat(2, 1);
        state.xhat << 4.0, 0.0;
        SaturationLevel h(10);
        SystemState whole = step_event_exact(state, L, h, 0.5);
        SystemState halves = step_event_exact(step_event_exact(state, L, h, 0.25), L, h, 0.25);
        CHECK(whole.x == halves.x);
    }
}

TEST_CASE("agreement of clamped inputs equals state agreement on a grid",
          "[dynamics][exhaustive]") {
    const double h = 1.0;
    const double grid[5] = {-2.0 * h, -0.5 * h, 0.0, 0.5 * h, 2.0 * h};
    std::mt19937 rng(203);
    for (int trial = 0; trial < 20; ++trial) {
        Index n = std::uniform_int_distribution<Index>(2, 4)(rng);
        Mat a = testutil::random_spanning_tree(rng, n);
        WeightedDigraph g = build_graph(a);
        if (!has_directed_spanning_tree(g)) continue;
        Laplacian L = laplacian(g);

        long combos = 1;
        for (Index i = 0; i < n; ++i) combos *= 5;
        for (long c = 0; c < combos; ++c) {
            Mat x(n, 1);
            long rem = c;
            for (Index i = 0; i < n; ++i) {
                x(i, 0) = grid[rem % 5];
                rem /= 5;
            }
            Mat y = saturate_expr(continuous_input(L, x), h).eval();
            double y_spread = 0.0, x_spread = 0.0;
            for (Index i = 0; i < n; ++i) {
                for (Index j = i + 1; j < n; ++j) {
                    y_spread = std::max(y_spread, std::abs(y(i, 0) - y(j, 0)));
                    x_spread = std::max(x_spread, std::abs(x(i, 0) - x(j, 0)));
                }
            }
            bool y_equal = y_spread <= 1e-12;
            bool x_equal = x_spread == 0.0;
            if (y_equal != x_equal) {
                CAPTURE(trial, c, x, y);
                REQUIRE(y_equal == x_equal);
            }
        }
    }
    SUCCEED("clamped-input agreement matched state agreement on every grid point");
}

TEST_CASE("continuous runs respect the speed bound and stay sampled", "[dynamics]") {
    std::mt19937 rng(204);
    Mat a = testutil::random_strongly_connected(rng, 5);
    WeightedDigraph g = build_graph(a);
    Mat x0 = 8.0 * Mat::Random(5, 2);  // p = 2
    SaturationLevel h(2.0);
    Trajectory traj = run_continuous_simulation(g, h, x0, 3.0, 1e-3, 0.05);

    REQUIRE(traj.samples.size() == 61);
    CHECK(traj.samples.front().t == 0.0);
    CHECK(traj.samples.back().t == Approx(3.0));
    const double speed_cap = h.h * std::sqrt(2.0);
    for (std::size_t k = 0; k < traj.samples.size(); ++k) {
        const auto& s = traj.samples[k];
        CHECK(s.sat_u.cwiseAbs().maxCoeff() <= h.h + 1e-12);
        if (k > 0) {
            const auto& prev = traj.samples[k - 1];
            CHECK(s.t > prev.t);
            double dt = s.t - prev.t;
            for (Index i = 0; i < 5; ++i) {
                CHECK((s.x.row(i) - prev.x.row(i)).norm() <= dt * speed_cap + 1e-12);
            }
        }
    }
    // consensus progress
    CHECK(consensus_error(traj.samples.back().x) < consensus_error(traj.samples.front().x));
}
