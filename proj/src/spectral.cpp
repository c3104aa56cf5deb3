#include "satcon/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "satcon/errors.hpp"

namespace satcon {

namespace {

constexpr int kInverseIterationCap = 200;
constexpr double kResidualTarget = 1e-12;

Mat checked_symmetrize(const Mat& m) {
    if (m.rows() != m.cols()) {
        throw DimensionMismatch("symmetric eigenproblem needs a square matrix");
    }
    double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * scale) {
        throw ValidationError("matrix asymmetry " + std::to_string(asym) +
                              " exceeds tolerance");
    }
    return 0.5 * (m + m.transpose());
}

Vec symmetric_eigenvalues(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(checked_symmetrize(m), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw EigensolverFailure("symmetric eigensolver did not converge");
    }
    return es.eigenvalues();
}

double min_eigenvalue(const Mat& m) { return symmetric_eigenvalues(m).minCoeff(); }

bool is_irreducible(const Mat& L) {
    Mat adj = (-L).cwiseMax(0.0);
    adj.diagonal().setZero();
    return strongly_connected_components(WeightedDigraph{adj}).size() == 1;
}

}  // namespace

double spectral_radius(const Mat& m) {
    Vec ev = symmetric_eigenvalues(m);
    return ev.cwiseAbs().maxCoeff();
}

double min_positive_eigenvalue(const Mat& m) {
    Vec ev = symmetric_eigenvalues(m);
    double rho = ev.cwiseAbs().maxCoeff();
    double cutoff = 1e-9 * rho;
    double best = -1.0;
    for (Index i = 0; i < ev.size(); ++i) {
        if (ev(i) > cutoff && (best < 0.0 || ev(i) < best)) best = ev(i);
    }
    if (best < 0.0) {
        throw NoPositiveEigenvalue("no eigenvalue above cutoff " + std::to_string(cutoff));
    }
    return best;
}

Vec left_eigenvector(const Mat& L) {
    const Index n = L.rows();
    if (n != L.cols()) throw DimensionMismatch("Laplacian must be square");
    if (n == 1) return Vec::Ones(1);
    if (!is_irreducible(L)) {
        throw NotIrreducible("left_eigenvector needs an irreducible Laplacian");
    }

    const double scale = std::max(1.0, L.cwiseAbs().maxCoeff());
    const double shift = 1e-13 * scale;
    Eigen::FullPivLU<Mat> lu(L.transpose() - shift * Mat::Identity(n, n));

    Vec v = Vec::Constant(n, 1.0 / static_cast<double>(n));
    bool converged = false;
    for (int it = 0; it < kInverseIterationCap; ++it) {
        Vec w = lu.solve(v);
        double norm = w.norm();
        if (!(norm > 0.0) || !w.allFinite()) {
            throw EigensolverFailure("inverse iteration produced a degenerate vector");
        }
        v = w / norm;
        if ((L.transpose() * v).lpNorm<Eigen::Infinity>() <= kResidualTarget * scale) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw EigensolverFailure("inverse iteration did not reach residual target");
    }

    if (v.sum() < 0.0) v = -v;
    if (v.minCoeff() <= 0.0) {
        throw EigensolverFailure("left null vector is not strictly positive");
    }
    return v / v.sum();
}

SpectralData build_spectral(const Mat& L) {
    SpectralData s;
    s.xi = left_eigenvector(L);
    const Index n = L.rows();
    s.Xi = s.xi.asDiagonal();
    s.U = s.Xi - s.xi * s.xi.transpose();
    s.R = 0.5 * (s.Xi * L + L.transpose() * s.Xi);
    s.rho_LTL = spectral_radius(L.transpose() * L);
    if (n > 1) {
        s.rho_U = spectral_radius(s.U);
        s.rho2_U = min_positive_eigenvalue(s.U);
        s.rho2_R = min_positive_eigenvalue(s.R);
    }
    for (const auto& check : spectral_certificates(L, s)) {
        if (!check.pass) {
            throw CertificateFailure(check.name + " violated: margin " +
                                     std::to_string(check.margin));
        }
    }
    return s;
}

std::vector<CertificateCheck> spectral_certificates(const Mat& L, const SpectralData& s) {
    std::vector<CertificateCheck> checks;
    auto add = [&checks](std::string name, double margin, double tol) {
        checks.push_back({std::move(name), margin, tol, margin >= -tol});
    };

    double scale = std::max(1.0, L.cwiseAbs().maxCoeff());
    add("left_null_residual", -(s.xi.transpose() * L).cwiseAbs().maxCoeff(), 1e-9 * scale);
    add("U_psd", min_eigenvalue(s.U), 1e-9);
    add("R_psd", min_eigenvalue(s.R), 1e-9);
    add("R_identity", -(s.R - 0.5 * (s.U * L + L.transpose() * s.U)).cwiseAbs().maxCoeff(),
        1e-9);
    if (L.rows() > 1) {
        Mat lhs1 = s.U - (s.rho2_U / s.rho_LTL) * (L.transpose() * L);
        add("U_dominates_LTL", min_eigenvalue(lhs1), 1e-8);
        Mat lhs2 = s.R - (s.rho2_R / s.rho_U) * s.U;
        add("R_dominates_U", min_eigenvalue(lhs2), 1e-8);
    }
    return checks;
}

BlockSpectralData build_block_spectral(const PFDecomposition& pf) {
    BlockSpectralData b;
    const int M = pf.block_count();
    for (int m = 0; m < M; ++m) {
        Vec xi = left_eigenvector(pf.auxiliary_blocks[m]);
        Mat XiL = xi.asDiagonal() * pf.diagonal_blocks[m];
        b.Q.push_back(0.5 * (XiL + XiL.transpose()));
        b.xi.push_back(std::move(xi));
    }

    const auto& xiM = b.xi.back();
    b.U_last = Mat(xiM.asDiagonal()) - xiM * xiM.transpose();
    const Index nM = pf.block_sizes.back();
    b.rho_U_last = nM > 1 ? spectral_radius(b.U_last) : 0.0;

    for (int m = 0; m < M; ++m) {
        bool last = (m == M - 1);
        if (last && pf.block_sizes[m] == 1) {
            b.rho2_Q.push_back(0.0);  // closed single agent: Q^M = [0]
        } else {
            b.rho2_Q.push_back(min_positive_eigenvalue(b.Q[m]));
        }
    }
    b.conditioning_ratio = b.rho_U_last > 0.0 ? b.rho2_Q.back() / b.rho_U_last : 0.0;

    // Pairwise coupling weights: block m against the aggregate of blocks
    // m+1..M. With two blocks the aggregate is the closed block itself.
    const Mat& L = pf.permuted;
    const Index n = L.rows();
    double rho_LTL = spectral_radius(L.transpose() * L);
    for (int m = 0; m + 1 < M; ++m) {
        BlockSpectralData::PairWeights w;
        const Index nm = pf.block_sizes[m];
        const Index off = pf.offsets[m];
        const Index agg_off = pf.offsets[m + 1];
        const Index agg_n = n - agg_off;

        double max_xi_diag = 0.0;
        for (int q = m + 1; q < M; ++q) {
            for (Index i = 0; i < pf.block_sizes[q]; ++i) {
                max_xi_diag = std::max(max_xi_diag, b.xi[q](i) * pf.diagonal_blocks[q](i, i));
            }
        }
        Mat agg = L.block(agg_off, agg_off, agg_n, agg_n);
        w.d1 = 2.0 * max_xi_diag * spectral_radius(agg.transpose() * agg);

        double max_own = 0.0;
        for (Index i = 0; i < nm; ++i) {
            for (Index j = 0; j < nm; ++j) {
                double v = b.xi[m](i) * pf.diagonal_blocks[m](i, j);
                max_own = std::max(max_own, v * v);
            }
        }
        double rho2_Qm = b.rho2_Q[m];
        w.d2 = 0.25 + static_cast<double>(nm * nm) * max_own / rho2_Qm;

        double max_cross = 0.0;
        for (Index i = 0; i < nm; ++i) {
            for (Index j = 0; j < agg_n; ++j) {
                double v = b.xi[m](i) * L(off + i, agg_off + j);
                max_cross = std::max(max_cross, v * v);
            }
        }
        w.d3 = 2.0 * static_cast<double>(nm) * static_cast<double>(agg_n) * max_cross *
               (1.0 / rho2_Qm + 1.0);
        w.d4 = w.d2 * rho_LTL;
        b.weights.push_back(w);
    }

    for (const auto& check : block_certificates(pf, b)) {
        if (!check.pass) {
            throw CertificateFailure(check.name + " violated: margin " +
                                     std::to_string(check.margin));
        }
    }
    return b;
}

std::vector<CertificateCheck> block_certificates(const PFDecomposition& pf,
                                                 const BlockSpectralData& b) {
    std::vector<CertificateCheck> checks;
    auto add = [&checks](std::string name, double margin, double tol) {
        checks.push_back({std::move(name), margin, tol, margin >= -tol});
    };

    const int M = pf.block_count();
    for (int m = 0; m + 1 < M; ++m) {
        add("Q" + std::to_string(m + 1) + "_positive_definite", min_eigenvalue(b.Q[m]),
            -1e-12);  // strict: margin must be positive
    }
    add("Q_last_psd", min_eigenvalue(b.Q.back()), 1e-9);
    add("U_last_psd", min_eigenvalue(b.U_last), 1e-9);
    if (b.rho_U_last > 0.0) {
        Mat lhs = b.Q.back() - (b.rho2_Q.back() / b.rho_U_last) * b.U_last;
        add("Q_last_dominates_U_last", min_eigenvalue(lhs), 1e-8);
    } else {
        add("Q_last_dominates_U_last", 0.0, 1e-8);  // single closed agent: 0 >= 0
    }
    return checks;
}

}  // namespace satcon
