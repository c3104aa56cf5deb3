#include "satcon/graph.hpp"

#include <algorithm>
#include <string>

#include "satcon/errors.hpp"

namespace satcon {

namespace {

/// Tarjan over the dependency direction (i -> j iff adjacency(i, j) > 0,
/// i.e. i listens to j). Components are emitted in reverse topological
/// order of that orientation, which puts the closed component first.
class TarjanScc {
public:
    explicit TarjanScc(const Mat& adjacency)
        : a_(adjacency),
          n_(adjacency.rows()),
          index_(n_, -1),
          lowlink_(n_, 0),
          on_stack_(n_, false) {}

    std::vector<std::vector<Index>> run() {
        for (Index v = 0; v < n_; ++v) {
            if (index_[v] < 0) strongconnect(v);
        }
        return components_;
    }

private:
    void strongconnect(Index root) {
        // Iterative DFS; frames hold the next out-neighbor to try.
        struct Frame { Index v; Index next; };
        std::vector<Frame> frames;
        push_vertex(root);
        frames.push_back({root, 0});
        while (!frames.empty()) {
            auto& [v, next] = frames.back();
            bool descended = false;
            while (next < n_) {
                Index w = next++;
                if (v == w || a_(v, w) <= kEdgeWeightFloor) continue;
                if (index_[w] < 0) {
                    push_vertex(w);
                    frames.push_back({w, 0});
                    descended = true;
                    break;
                }
                if (on_stack_[w]) lowlink_[v] = std::min(lowlink_[v], index_[w]);
            }
            if (descended) continue;
            if (lowlink_[v] == index_[v]) {
                std::vector<Index> comp;
                Index w;
                do {
                    w = stack_.back();
                    stack_.pop_back();
                    on_stack_[w] = false;
                    comp.push_back(w);
                } while (w != v);
                std::sort(comp.begin(), comp.end());
                components_.push_back(std::move(comp));
            }
            Index finished = v;
            frames.pop_back();
            if (!frames.empty()) {
                Index parent = frames.back().v;
                lowlink_[parent] = std::min(lowlink_[parent], lowlink_[finished]);
            }
        }
    }

    void push_vertex(Index v) {
        index_[v] = lowlink_[v] = counter_++;
        stack_.push_back(v);
        on_stack_[v] = true;
    }

    const Mat& a_;
    Index n_;
    Index counter_ = 0;
    std::vector<Index> index_, lowlink_;
    std::vector<bool> on_stack_;
    std::vector<Index> stack_;
    std::vector<std::vector<Index>> components_;
};

bool component_is_closed(const Mat& a, const std::vector<Index>& comp, Index n) {
    std::vector<bool> inside(n, false);
    for (Index v : comp) inside[v] = true;
    for (Index v : comp) {
        for (Index w = 0; w < n; ++w) {
            if (!inside[w] && a(v, w) > kEdgeWeightFloor) return false;
        }
    }
    return true;
}

bool block_is_strongly_connected(const Mat& block) {
    if (block.rows() <= 1) return true;
    Mat adj = (-block).cwiseMax(0.0);
    adj.diagonal().setZero();
    TarjanScc scc(adj);
    return scc.run().size() == 1;
}

}  // namespace

WeightedDigraph build_graph(const Mat& adjacency) {
    if (adjacency.rows() != adjacency.cols()) {
        throw NonSquare("adjacency matrix must be square, got " +
                        std::to_string(adjacency.rows()) + "x" +
                        std::to_string(adjacency.cols()));
    }
    if (adjacency.size() == 0) {
        throw NonSquare("adjacency matrix must be nonempty");
    }
    for (Index i = 0; i < adjacency.rows(); ++i) {
        for (Index j = 0; j < adjacency.cols(); ++j) {
            double w = adjacency(i, j);
            if (!(w >= 0.0)) {  // also rejects NaN
                throw NegativeWeight("adjacency(" + std::to_string(i) + "," +
                                     std::to_string(j) + ") = " + std::to_string(w));
            }
            if (i == j && w != 0.0) {
                throw NonzeroDiagonal("adjacency(" + std::to_string(i) + "," +
                                      std::to_string(i) + ") must be zero");
            }
        }
    }
    return WeightedDigraph{adjacency};
}

Laplacian laplacian(const WeightedDigraph& g) {
    Vec deg = g.adjacency.rowwise().sum();
    Mat L = -g.adjacency;
    L.diagonal() = deg;
    return Laplacian{std::move(L), std::move(deg)};
}

std::vector<std::vector<Index>> strongly_connected_components(const WeightedDigraph& g) {
    TarjanScc scc(g.adjacency);
    auto comps = scc.run();
    // Tarjan emits the closed component first; the published block order
    // wants it last.
    std::reverse(comps.begin(), comps.end());
    return comps;
}

bool has_directed_spanning_tree(const WeightedDigraph& g) {
    auto comps = strongly_connected_components(g);
    int closed = 0;
    for (const auto& comp : comps) {
        if (component_is_closed(g.adjacency, comp, g.size())) ++closed;
    }
    return closed == 1;
}

Mat PFDecomposition::unpermute(const Mat& permuted_rows) const {
    Mat out(permuted_rows.rows(), permuted_rows.cols());
    for (Index k = 0; k < static_cast<Index>(permutation.size()); ++k) {
        out.row(permutation[k]) = permuted_rows.row(k);
    }
    return out;
}

Mat PFDecomposition::permute(const Mat& original_rows) const {
    Mat out(original_rows.rows(), original_rows.cols());
    for (Index k = 0; k < static_cast<Index>(permutation.size()); ++k) {
        out.row(k) = original_rows.row(permutation[k]);
    }
    return out;
}

PFDecomposition pf_decompose(const Laplacian& L) {
    const Index n = L.size();
    Mat adj = (-L.matrix).cwiseMax(0.0);
    adj.diagonal().setZero();
    WeightedDigraph g{adj};
    if (!has_directed_spanning_tree(g)) {
        throw NoSpanningTree("pf_decompose requires a directed spanning tree");
    }
    auto comps = strongly_connected_components(g);

    PFDecomposition pf;
    pf.offsets.push_back(0);
    for (const auto& comp : comps) {
        pf.permutation.insert(pf.permutation.end(), comp.begin(), comp.end());
        pf.block_sizes.push_back(static_cast<Index>(comp.size()));
        pf.offsets.push_back(pf.offsets.back() + static_cast<Index>(comp.size()));
    }

    pf.permuted.resize(n, n);
    for (Index r = 0; r < n; ++r) {
        for (Index c = 0; c < n; ++c) {
            pf.permuted(r, c) = L.matrix(pf.permutation[r], pf.permutation[c]);
        }
    }

    const int M = pf.block_count();
    for (int m = 0; m < M; ++m) {
        Index off = pf.offsets[m];
        Index nm = pf.block_sizes[m];
        Mat block = pf.permuted.block(off, off, nm, nm);
        if (!block_is_strongly_connected(block)) {
            throw Error("diagonal block is neither irreducible nor 1x1; "
                        "decomposition is malformed");
        }
        Mat aux = block;
        for (Index i = 0; i < nm; ++i) {
            aux(i, i) = -(block.row(i).sum() - block(i, i));
        }
        pf.diagonal_blocks.push_back(std::move(block));
        pf.auxiliary_blocks.push_back(std::move(aux));
    }

    // Sub-diagonal blocks must vanish and every non-final block must couple
    // to a later one; both follow from the component order, so a violation
    // here is a bug rather than bad input.
    for (int m = 0; m < M; ++m) {
        for (int q = 0; q < m; ++q) {
            auto sub = pf.permuted.block(pf.offsets[m], pf.offsets[q],
                                         pf.block_sizes[m], pf.block_sizes[q]);
            if (sub.cwiseAbs().maxCoeff() > kEdgeWeightFloor) {
                throw Error("permuted Laplacian is not block upper triangular");
            }
        }
    }
    for (int m = 0; m + 1 < M; ++m) {
        bool coupled = false;
        for (int q = m + 1; q < M && !coupled; ++q) {
            coupled = pf.coupling(m, q).cwiseAbs().maxCoeff() > kEdgeWeightFloor;
        }
        if (!coupled) {
            throw Error("block " + std::to_string(m) + " has no coupling to later blocks");
        }
    }
    return pf;
}

}  // namespace satcon
