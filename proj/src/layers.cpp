#include "agsr/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "agsr/errors.hpp"

namespace agsr {

TensorPtr gcn_forward(Tape& tape, const GcnLayer& layer, const TensorPtr& a_norm,
                      const TensorPtr& x, Activation act) {
    if (a_norm->rows() != a_norm->cols())
        throw ShapeError("gcn_forward: propagation matrix must be square");
    TensorPtr h = tape.matmul(tape.matmul(a_norm, x), layer.weight);
    return act == Activation::relu ? tape.relu(h) : h;
}

TensorPtr normalized_adjacency_t(Tape& tape, const TensorPtr& a) {
    if (a->rows() != a->cols())
        throw ShapeError("normalized_adjacency_t: matrix must be square");
    TensorPtr a_hat = tape.add(a, tape.constant(identity(a->rows())));
    TensorPtr deg = tape.row_sum(tape.abs(a_hat));
    TensorPtr dinv = tape.pow_const(deg, -0.5);
    TensorPtr outer = tape.matmul(dinv, tape.transpose(dinv));
    return tape.mul(a_hat, outer);
}

PoolResult pool_forward(Tape& tape, const PoolLayer& layer, const Matrix& adjacency,
                        const TensorPtr& x) {
    const std::size_t n = x->rows();
    const std::size_t f = x->cols();
    if (adjacency.rows() != n || adjacency.cols() != n)
        throw ShapeError("pool_forward: adjacency does not match feature rows");
    if (layer.projection->rows() != f || layer.projection->cols() != 1)
        throw ShapeError("pool_forward: projection must be F x 1");
    if (layer.keep == 0 || layer.keep > n)
        throw ConfigError("pool_forward: keep must be in [1, n]");

    double norm_sq = 0.0;
    for (std::size_t i = 0; i < f; ++i) {
        const double u = layer.projection->values(i, 0);
        norm_sq += u * u;
    }
    if (std::sqrt(norm_sq) < 1e-12)
        throw DegenerateProjection("pool_forward: projection norm below 1e-12");

    // v = x u / ||u||, built from tape ops so the gate stays trainable.
    TensorPtr sum_sq = tape.sum(tape.mul(layer.projection, layer.projection));
    TensorPtr inv_norm = tape.pow_const(sum_sq, -0.5);
    TensorPtr scores = tape.mul_scalar(tape.matmul(x, layer.projection), inv_norm);

    // Hard top-k on plain score values; ties keep the lower index.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = scores->values(a, 0), vb = scores->values(b, 0);
        if (va != vb) return va > vb;
        return a < b;
    });
    double margin = std::numeric_limits<double>::infinity();
    if (layer.keep < n)
        margin = scores->values(order[layer.keep - 1], 0) -
                 scores->values(order[layer.keep], 0);
    std::vector<std::size_t> indices(order.begin(), order.begin() + layer.keep);
    std::sort(indices.begin(), indices.end());

    TensorPtr gate = tape.sigmoid(tape.gather_rows(scores, indices));
    TensorPtr gate_cols = tape.matmul(gate, tape.constant(Matrix(1, f, 1.0)));
    TensorPtr features = tape.mul(tape.gather_rows(x, indices), gate_cols);

    Matrix sub_adj(layer.keep, layer.keep);
    for (std::size_t i = 0; i < layer.keep; ++i)
        for (std::size_t j = 0; j < layer.keep; ++j)
            sub_adj(i, j) = adjacency(indices[i], indices[j]);

    PoolResult out;
    out.features = features;
    out.adjacency = std::move(sub_adj);
    out.indices = std::move(indices);
    out.margin = margin;
    return out;
}

TensorPtr unpool_forward(Tape& tape, const UnpoolLayer& layer, const TensorPtr& x) {
    return tape.scatter_rows(x, layer.indices, layer.original_n);
}

GsrOutput gsr_forward(Tape& tape, const GsrLayer& layer, const TensorPtr& z_l,
                      const Matrix& u0, const Matrix& s_d) {
    const std::size_t n = u0.rows();
    const std::size_t nk = s_d.rows();
    if (u0.cols() != n) throw ShapeError("gsr_forward: u0 must be square");
    if (s_d.cols() != n) throw ShapeError("gsr_forward: s_d must be (n*k) x n");
    if (z_l->rows() != n || z_l->cols() != nk)
        throw ShapeError("gsr_forward: z_l must be n x (n*k)");
    if (layer.weight->rows() != nk || layer.weight->cols() != nk)
        throw ShapeError("gsr_forward: weight must be (n*k) x (n*k)");

    TensorPtr prop = tape.constant(matmul(s_d, transpose(u0)));
    TensorPtr raw = tape.matmul(layer.weight, tape.matmul(prop, z_l));
    TensorPtr a_h = tape.scale(tape.add(raw, tape.transpose(raw)), 0.5);
    TensorPtr prod = tape.matmul(a_h, tape.transpose(a_h));
    TensorPtr x_h = tape.scale(tape.add(prod, tape.transpose(prod)), 0.5);
    return {a_h, x_h};
}

} // namespace agsr
