#pragma once

#include <string>
#include <vector>

#include "satcon/graph.hpp"
#include "satcon/types.hpp"

namespace satcon {

/// Spectral radius max|lambda| of a symmetric matrix. The input is checked
/// for asymmetry (tolerance 1e-10 relative) and symmetrized before the
/// eigensolve.
double spectral_radius(const Mat& m);

/// Smallest eigenvalue above the zero cluster of a symmetric PSD matrix.
/// Eigenvalues below 1e-9 * rho(M) count as zero. Throws
/// NoPositiveEigenvalue when nothing lies above the cutoff.
double min_positive_eigenvalue(const Mat& m);

/// Positive left null vector of an irreducible Laplacian, normalized so its
/// entries sum to 1. A 1x1 input returns [1]. Computed by shifted inverse
/// iteration on the transpose.
Vec left_eigenvector(const Mat& L);

/// Certified spectral quantities of an irreducible Laplacian.
struct SpectralData {
    Vec xi;          ///< positive left null vector, sums to 1
    Mat Xi;          ///< diag(xi)
    Mat U;           ///< Xi - xi xi^T, PSD with null space span{1}
    Mat R;           ///< (Xi L + L^T Xi)/2, PSD
    double rho_U = 0.0;
    double rho2_U = 0.0;
    double rho2_R = 0.0;
    double rho_LTL = 0.0;
};

/// One numerically certified matrix inequality: pass iff margin >= -tolerance.
struct CertificateCheck {
    std::string name;
    double margin = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Builds SpectralData and certifies its defining inequalities
/// (U >= rho2(U)/rho(L^T L) * L^T L >= 0 and R >= rho2(R)/rho(U) * U >= 0,
/// plus R = (U L + L^T U)/2). Throws CertificateFailure on violation.
SpectralData build_spectral(const Mat& L);

/// The individual certificate margins behind build_spectral, for reports.
std::vector<CertificateCheck> spectral_certificates(const Mat& L, const SpectralData& s);

/// Per-block spectral data of a block upper-triangular decomposition.
struct BlockSpectralData {
    /// Positive left null vector of the zero-row-sum variant of each block.
    std::vector<Vec> xi;
    /// Q^m = (Xi^m L^{m,m} + (Xi^m L^{m,m})^T)/2, positive definite for all
    /// non-final blocks, PSD for the final one.
    std::vector<Mat> Q;
    std::vector<double> rho2_Q;
    /// Final (closed) block only: U^M = Xi^M - xi^M (xi^M)^T.
    Mat U_last;
    double rho_U_last = 0.0;
    /// rho2(Q^M)/rho(U^M); 0 when the closed block is a single agent.
    double conditioning_ratio = 0.0;

    /// Coupling weights of the two-block energy argument. One entry per
    /// non-final block m, treating everything after m as the aggregated
    /// leader. For two blocks this is exactly the published construction;
    /// for more it is an extension used only as a diagnostic.
    struct PairWeights {
        double d1 = 0.0, d2 = 0.0, d3 = 0.0, d4 = 0.0;
    };
    std::vector<PairWeights> weights;
};

/// Builds per-block data and certifies positive definiteness of the
/// non-final Q^m plus the closed-block inequality
/// Q^M >= rho2(Q^M)/rho(U^M) * U^M. Throws CertificateFailure on violation.
BlockSpectralData build_block_spectral(const PFDecomposition& pf);

/// The certificate margins behind build_block_spectral, for reports.
std::vector<CertificateCheck> block_certificates(const PFDecomposition& pf,
                                                 const BlockSpectralData& b);

}  // namespace satcon
