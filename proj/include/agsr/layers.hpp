#ifndef AGSR_LAYERS_HPP
#define AGSR_LAYERS_HPP

#include <vector>

#include "agsr/autodiff.hpp"
#include "agsr/graph.hpp"

namespace agsr {

enum class Activation { none, relu };

/// Graph convolution: act(a_norm * x * weight). `a_norm` is a
/// (normalized) propagation matrix; pass a tape constant when it should
/// not be differentiated through.
struct GcnLayer {
    TensorPtr weight; // F_in x F_out
};

TensorPtr gcn_forward(Tape& tape, const GcnLayer& layer, const TensorPtr& a_norm,
                      const TensorPtr& x, Activation act);

/// Tape version of graph-core normalized_adjacency, for propagation
/// matrices that are themselves predictions: D^{-1/2} (A + I) D^{-1/2}
/// with D the row sums of |A + I|, differentiable end to end.
TensorPtr normalized_adjacency_t(Tape& tape, const TensorPtr& a);

/// Top-k pooling. Nodes are scored by projecting features onto a
/// trainable direction, v = x u / ||u||; the k best keep their rows,
/// gated by sigmoid(v). The ranking itself is discrete: gradients flow
/// through the gate and the kept features only. Score ties choose the
/// lower node index; the surviving indices are reported in ascending
/// order.
struct PoolLayer {
    TensorPtr projection; // F x 1
    std::size_t keep = 0;
};

struct PoolResult {
    TensorPtr features;               // keep x F
    Matrix adjacency;                 // keep x keep submatrix, plain value
    std::vector<std::size_t> indices; // ascending
    /// Score gap between the last kept and first dropped node
    /// (+inf when nothing is dropped). Near-zero margins make the
    /// selection unstable under parameter perturbation.
    double margin = 0.0;
};

PoolResult pool_forward(Tape& tape, const PoolLayer& layer, const Matrix& adjacency,
                        const TensorPtr& x);

/// Inverse of pooling: rows return to their recorded positions in an
/// original_n-row zero matrix.
struct UnpoolLayer {
    std::vector<std::size_t> indices;
    std::size_t original_n = 0;
};

TensorPtr unpool_forward(Tape& tape, const UnpoolLayer& layer, const TensorPtr& x);

/// Super-resolution layer. Propagates LR embeddings through the LR
/// spectral basis replicated by the selection matrix, then forms a
/// symmetric HR adjacency estimate and its self-similarity:
///   raw = weight * s_d * u0^T * z_l
///   a_h = (raw + raw^T) / 2
///   x_h = sym(a_h a_h^T)
/// u0 (LR Laplacian eigenvectors) and s_d are fixed inputs; gradients
/// reach only `weight` and z_l.
struct GsrLayer {
    TensorPtr weight; // (n*k) x (n*k)
};

struct GsrOutput {
    TensorPtr a_h; // predicted HR adjacency, (n*k) x (n*k)
    TensorPtr x_h; // HR node features
};

GsrOutput gsr_forward(Tape& tape, const GsrLayer& layer, const TensorPtr& z_l,
                      const Matrix& u0, const Matrix& s_d);

} // namespace agsr

#endif // AGSR_LAYERS_HPP
