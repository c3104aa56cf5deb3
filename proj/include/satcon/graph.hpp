#pragma once

#include <vector>

#include "satcon/types.hpp"

namespace satcon {

/// Entries with magnitude below this are treated as absent edges when
/// deriving connectivity from ingested matrices.
inline constexpr double kEdgeWeightFloor = 1e-15;

/// Weighted digraph on n agents. adjacency(i, j) > 0 means agent j sends
/// information to agent i with that weight.
struct WeightedDigraph {
    Mat adjacency;

    Index size() const { return adjacency.rows(); }
    Index edge_count() const { return (adjacency.array() > kEdgeWeightFloor).count(); }
};

/// Validates an adjacency matrix (square, nonnegative, zero diagonal) and
/// wraps it. Violations throw; nothing is silently repaired.
WeightedDigraph build_graph(const Mat& adjacency);

/// In-degree Laplacian L = D - A. Every row sums to zero.
struct Laplacian {
    Mat matrix;
    Vec degrees;

    Index size() const { return matrix.rows(); }
};

Laplacian laplacian(const WeightedDigraph& g);

/// Strongly connected components, ordered so that component m only draws
/// information from components q > m. The closed component (the one that
/// receives nothing from outside itself) is last. This is the block order
/// used by pf_decompose.
std::vector<std::vector<Index>> strongly_connected_components(const WeightedDigraph& g);

/// True iff some agent reaches every other agent along directed
/// information-flow paths. Equivalent to the condensation having exactly
/// one closed component.
bool has_directed_spanning_tree(const WeightedDigraph& g);

/// Block upper-triangular permutation of a Laplacian whose digraph has a
/// directed spanning tree. Block m couples only to blocks q > m; the
/// closed component forms the final block M. Each diagonal block is
/// irreducible or 1x1.
struct PFDecomposition {
    /// permutation[k] = original agent index occupying permuted slot k.
    std::vector<Index> permutation;
    /// The permuted Laplacian P L P^T.
    Mat permuted;
    /// Diagonal blocks, in block order.
    std::vector<Mat> diagonal_blocks;
    /// Zero-row-sum variants of the diagonal blocks (diagonal replaced by
    /// minus the off-diagonal row sum).
    std::vector<Mat> auxiliary_blocks;
    std::vector<Index> block_sizes;
    /// Cumulative offsets N_0..N_M of the blocks inside the permuted matrix.
    std::vector<Index> offsets;

    int block_count() const { return static_cast<int>(block_sizes.size()); }

    /// Coupling block between diagonal blocks m and q (0-based, m < q).
    Eigen::Block<const Mat> coupling(int m, int q) const {
        return permuted.block(offsets[m], offsets[q], block_sizes[m], block_sizes[q]);
    }

    /// Map a permuted state matrix back to the original agent order.
    Mat unpermute(const Mat& permuted_rows) const;
    /// Map an original-order state matrix into block order.
    Mat permute(const Mat& original_rows) const;
};

/// Throws NoSpanningTree when the graph lacks one.
PFDecomposition pf_decompose(const Laplacian& L);

}  // namespace satcon
