#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <random>

#include "satcon/errors.hpp"
#include "satcon/spectral.hpp"
#include "test_helpers.hpp"

using namespace satcon;
using Catch::Approx;

TEST_CASE("left eigenvector of hand-checked Laplacians", "[spectral]") {
    SECTION("2-agent asymmetric") {
        Mat L(2, 2);
        L << 2, -2, -1, 1;
        Vec xi = left_eigenvector(L);
        CHECK(xi(0) == Approx(1.0 / 3.0).margin(1e-12));
        CHECK(xi(1) == Approx(2.0 / 3.0).margin(1e-12));
    }
    SECTION("single agent") {
        Vec xi = left_eigenvector(Mat::Zero(1, 1));
        REQUIRE(xi.size() == 1);
        CHECK(xi(0) == 1.0);
    }
    SECTION("symmetric Laplacians have uniform weights") {
        std::mt19937 rng(101);
        for (Index n : {2, 4, 7}) {
            Mat a = testutil::random_strongly_connected(rng, n, 0.5);
            Mat sym = 0.5 * (a + a.transpose());  // symmetric, still connected
            Mat L = -sym;
            L.diagonal() = sym.rowwise().sum();
            Vec xi = left_eigenvector(L);
            CHECK((xi.array() - 1.0 / static_cast<double>(n)).abs().maxCoeff() < 1e-9);
        }
    }
    SECTION("reducible input is rejected") {
        CHECK_THROWS_AS(left_eigenvector(testutil::benchmark_laplacian()), NotIrreducible);
    }
}

TEST_CASE("left eigenvector agrees with the dense kernel oracle", "[spectral]") {
    SECTION("closed block of the benchmark graph") {
        Mat L22(3, 3);
        L22 << 2.6, 0, -2.6, -5.3, 5.3, 0, -8.7, -7, 15.7;
        Vec xi = left_eigenvector(L22);
        CHECK((xi.transpose() * L22).norm() < 1e-9);
        Vec oracle = testutil::left_null_oracle(L22);
        CHECK((xi - oracle).cwiseAbs().maxCoeff() < 1e-9);
    }
    SECTION("random irreducible Laplacians") {
        std::mt19937 rng(102);
        for (int trial = 0; trial < 40; ++trial) {
            Index n = std::uniform_int_distribution<Index>(2, 8)(rng);
            Mat a = testutil::random_strongly_connected(rng, n);
            Mat L = -a;
            L.diagonal() = a.rowwise().sum();
            Vec xi = left_eigenvector(L);
            CHECK((xi.transpose() * L).cwiseAbs().maxCoeff() < 1e-9);
            CHECK(xi.minCoeff() > 0.0);
            CHECK(xi.sum() == Approx(1.0).margin(1e-12));
            CHECK((xi - testutil::left_null_oracle(L)).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("spectral data of the 2-agent symmetric graph", "[spectral]") {
    Mat L(2, 2);
    L << 1, -1, -1, 1;
    SpectralData s = build_spectral(L);
    CHECK(s.xi(0) == Approx(0.5).margin(1e-12));
    Mat U_expected(2, 2);
    U_expected << 0.25, -0.25, -0.25, 0.25;
    CHECK((s.U - U_expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(s.rho_U == Approx(0.5).margin(1e-12));
    CHECK(s.rho2_U == Approx(0.5).margin(1e-12));
    CHECK(s.rho2_R == Approx(1.0).margin(1e-12));
    CHECK(s.rho_LTL == Approx(4.0).margin(1e-12));
    // the consensus direction is in the null space of U
    CHECK((s.U * Vec::Ones(2)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("certified inequalities hold on random irreducible Laplacians", "[spectral]") {
    std::mt19937 rng(103);
    for (int seed = 0; seed < 100; ++seed) {
        Index n = std::uniform_int_distribution<Index>(2, 8)(rng);
        Mat a = testutil::random_strongly_connected(rng, n);
        Mat L = -a;
        L.diagonal() = a.rowwise().sum();
        SpectralData s = build_spectral(L);  // throws on certificate failure
        for (const auto& check : spectral_certificates(L, s)) {
            CAPTURE(seed, check.name);
            CHECK(check.pass);
        }
        CHECK((s.U * Vec::Ones(n)).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("benchmark closed block passes every spectral certificate", "[spectral]") {
    Mat L22(3, 3);
    L22 << 2.6, 0, -2.6, -5.3, 5.3, 0, -8.7, -7, 15.7;
    SpectralData s = build_spectral(L22);
    for (const auto& check : spectral_certificates(L22, s)) {
        CAPTURE(check.name, check.margin);
        CHECK(check.pass);
    }
}

TEST_CASE("spectral radius and minimum positive eigenvalue", "[spectral]") {
    CHECK(spectral_radius(Mat::Identity(3, 3)) == Approx(1.0));
    CHECK(min_positive_eigenvalue(Mat::Identity(3, 3)) == Approx(1.0));

    CHECK(spectral_radius(Mat::Zero(2, 2)) == 0.0);
    CHECK_THROWS_AS(min_positive_eigenvalue(Mat::Zero(2, 2)), NoPositiveEigenvalue);

    Mat U(2, 2);
    U << 0.25, -0.25, -0.25, 0.25;
    CHECK(spectral_radius(U) == Approx(0.5).margin(1e-14));
    CHECK(min_positive_eigenvalue(U) == Approx(0.5).margin(1e-14));

    Mat asym(2, 2);
    asym << 0, 1, 0, 0;
    CHECK_THROWS_AS(spectral_radius(asym), ValidationError);
}

TEST_CASE("zero-cluster cutoff is stable under tiny perturbations", "[spectral]") {
    // well-separated spectrum {0, 0, 0.5, 1.2} in a random orthogonal frame
    std::mt19937 rng(104);
    Mat raw = Mat::Random(4, 4);
    Eigen::HouseholderQR<Mat> qr(raw);
    Mat Q = qr.householderQ();
    Vec ev(4);
    ev << 0.0, 0.0, 0.5, 1.2;
    Mat M = Q * ev.asDiagonal() * Q.transpose();
    M = 0.5 * (M + M.transpose());
    CHECK(min_positive_eigenvalue(M) == Approx(0.5).margin(1e-9));

    std::uniform_real_distribution<double> noise(-1e-12, 1e-12);
    Mat N = M;
    for (Index i = 0; i < 4; ++i) {
        for (Index j = 0; j <= i; ++j) {
            double d = noise(rng);
            N(i, j) += d;
            if (i != j) N(j, i) += d;
        }
    }
    CHECK(min_positive_eigenvalue(N) == Approx(0.5).margin(1e-6));
}

TEST_CASE("block spectral data of the benchmark graph", "[spectral]") {
    Laplacian L = laplacian(build_graph(testutil::adjacency_of(testutil::benchmark_laplacian())));
    PFDecomposition pf = pf_decompose(L);
    BlockSpectralData b = build_block_spectral(pf);

    REQUIRE(b.Q.size() == 2);
    // follower block energy matrix is positive definite (oracle eigensolve)
    Eigen::SelfAdjointEigenSolver<Mat> es(b.Q[0]);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    CHECK(b.rho2_Q[0] == Approx(es.eigenvalues().minCoeff()).epsilon(1e-9));

    for (const auto& check : block_certificates(pf, b)) {
        CAPTURE(check.name, check.margin);
        CHECK(check.pass);
    }
    REQUIRE(b.weights.size() == 1);
    CHECK(b.weights[0].d1 > 0.0);
    CHECK(b.weights[0].d2 > 0.25);
    CHECK(b.weights[0].d3 > 0.0);
    CHECK(b.weights[0].d4 == Approx(b.weights[0].d2 * spectral_radius(
                                        L.matrix.transpose() * L.matrix)));

    // d1 recomputed from its parts: 2 max_i{xi_i L_ii} rho(L22^T L22) over
    // the closed block, with the oracle eigenvector
    Mat L22 = pf.diagonal_blocks[1];
    Vec xi2 = testutil::left_null_oracle(L22);
    double expect_d1 = 2.0 * (xi2.array() * L22.diagonal().array()).maxCoeff() *
                       spectral_radius(L22.transpose() * L22);
    CHECK(b.weights[0].d1 == Approx(expect_d1).epsilon(1e-9));
}

TEST_CASE("degenerate block spectra", "[spectral]") {
    SECTION("strongly connected graph degenerates to the irreducible data") {
        Mat a(3, 3);
        a << 0, 1, 2, 2, 0, 1, 0.5, 1, 0;
        Laplacian L = laplacian(build_graph(a));
        PFDecomposition pf = pf_decompose(L);
        BlockSpectralData b = build_block_spectral(pf);
        SpectralData s = build_spectral(L.matrix);
        REQUIRE(b.Q.size() == 1);
        CHECK((b.xi[0] - s.xi).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((b.Q[0] - s.R).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((b.U_last - s.U).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(b.weights.empty());
    }
    SECTION("two-agent chain: scalar blocks") {
        Mat a = Mat::Zero(2, 2);
        a(1, 0) = 1.0;
        PFDecomposition pf = pf_decompose(laplacian(build_graph(a)));
        BlockSpectralData b = build_block_spectral(pf);
        CHECK(b.xi[0](0) == 1.0);
        CHECK(b.xi[1](0) == 1.0);
        CHECK(b.Q[0](0, 0) == 1.0);  // follower block scalar, positive
        CHECK(b.Q[1](0, 0) == 0.0);  // closed single agent
        CHECK(b.U_last(0, 0) == 0.0);
        CHECK(b.conditioning_ratio == 0.0);
    }
}

TEST_CASE("block certificates hold on random reducible spanning-tree digraphs",
          "[spectral]") {
    std::mt19937 rng(105);
    for (int seed = 0; seed < 100; ++seed) {
        Index n = std::uniform_int_distribution<Index>(2, 8)(rng);
        Mat a = testutil::random_spanning_tree_reducible(rng, n);
        Laplacian L = laplacian(build_graph(a));
        PFDecomposition pf = pf_decompose(L);
        REQUIRE(pf.block_count() >= 2);
        BlockSpectralData b = build_block_spectral(pf);
        for (const auto& check : block_certificates(pf, b)) {
            CAPTURE(seed, check.name, check.margin);
            CHECK(check.pass);
        }
    }
}
