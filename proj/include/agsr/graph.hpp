#ifndef AGSR_GRAPH_HPP
#define AGSR_GRAPH_HPP

#include <cstdint>
#include <vector>

#include "agsr/matrix.hpp"

namespace agsr {

/// Undirected weighted graph with a fixed node count. The adjacency
/// matrix must be square, exactly symmetric, zero on the diagonal and
/// free of NaN/Inf; the constructor enforces this.
struct WeightedGraph {
    std::size_t n = 0;
    Matrix adj;

    WeightedGraph() = default;
    explicit WeightedGraph(Matrix adjacency);
};

/// (M + M^T) / 2. Throws ShapeError if m is not square.
Matrix symmetrize(const Matrix& m);

/// Degree-normalized adjacency with self-loops: D^{-1/2} (A + I) D^{-1/2}
/// where D is the diagonal of row sums of |A + I|. Absolute values keep
/// the normalization well defined for signed weights (degrees are then
/// strictly positive thanks to the unit self-loop).
Matrix normalized_adjacency(const WeightedGraph& g);

/// Unnormalized Laplacian L = D - A with D_ii = sum_j |A_ij|.
Matrix graph_laplacian(const WeightedGraph& g);

/// Node strengths: s_i = sum_j |A_ij|.
std::vector<double> node_strength(const WeightedGraph& g);

/// Eigendecomposition of a real symmetric matrix. Eigenvalues are in
/// ascending order and `vectors` holds the matching orthonormal
/// eigenvectors as columns.
struct EigenDecomposition {
    std::vector<double> values;
    Matrix vectors;
};

/// Deterministic symmetric eigensolver: Householder reduction to
/// tridiagonal form followed by the implicitly shifted QL iteration.
/// Ties in the ascending eigenvalue sort are broken by original index,
/// and each eigenvector is oriented so its largest-magnitude entry
/// (lowest row index on ties) is positive. Input must be square and
/// symmetric to 1e-12; iteration failure raises EigenFailure.
EigenDecomposition eigendecompose(const Matrix& sym);

/// Number of eigendecompose calls made by this process. Cheap spectral
/// caching in the training loop is verified against this counter.
std::uint64_t eigendecompose_call_count();

/// Center m inside a target x target zero matrix. When target - m is
/// odd the extra row/column of padding goes on the top/left.
Matrix pad_isotropic(const Matrix& m, std::size_t target);

/// Inverse of pad_isotropic: extract the centered original x original
/// block. Entries are copied bit-exactly.
Matrix unpad_isotropic(const Matrix& m, std::size_t original);

/// Block selection matrix of shape (n*k) x n: k copies of I_n stacked
/// vertically. Multiplying by it replicates a spectrum k times.
Matrix selection_matrix(std::size_t n, std::size_t k);

} // namespace agsr

#endif // AGSR_GRAPH_HPP
