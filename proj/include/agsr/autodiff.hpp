#ifndef AGSR_AUTODIFF_HPP
#define AGSR_AUTODIFF_HPP

#include <functional>
#include <memory>
#include <vector>

#include "agsr/matrix.hpp"

namespace agsr {

/// A value in the computation graph. `grad` accumulates across backward
/// passes until explicitly zeroed, mirroring the usual deep-learning
/// optimizer protocol. Only leaves with requires_grad set receive
/// gradients.
struct Tensor {
    Matrix values;
    Matrix grad; // empty until first accumulation
    bool requires_grad = false;

    std::size_t rows() const { return values.rows(); }
    std::size_t cols() const { return values.cols(); }
};

using TensorPtr = std::shared_ptr<Tensor>;

/// Wrap a value. Parameters get requires_grad = true.
TensorPtr make_tensor(Matrix values, bool requires_grad = false);
TensorPtr make_param(Matrix values);

/// Reset an accumulated gradient to zeros (shape of values).
void zero_grad(const TensorPtr& t);

/// Records an expression graph op by op and replays it in reverse to
/// propagate adjoints. Forward results are plain values; nothing is
/// lazy. Any NaN or Inf produced by an op, in either direction, raises
/// NumericalError immediately rather than propagating.
class Tape {
public:
    /// Leaf with requires_grad = false; convenience for embedding plain
    /// matrices into an expression.
    TensorPtr constant(Matrix values);

    TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
    TensorPtr add(const TensorPtr& a, const TensorPtr& b);
    TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
    /// Entrywise product.
    TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
    /// Multiply every entry of a by the 1x1 tensor s.
    TensorPtr mul_scalar(const TensorPtr& a, const TensorPtr& s);
    TensorPtr scale(const TensorPtr& a, double c);
    TensorPtr relu(const TensorPtr& a);    // grad at 0 is 0
    TensorPtr sigmoid(const TensorPtr& a);
    TensorPtr abs(const TensorPtr& a);     // grad at 0 is 0
    TensorPtr log(const TensorPtr& a);
    TensorPtr clamp(const TensorPtr& a, double lo, double hi);
    /// Entrywise power with constant exponent.
    TensorPtr pow_const(const TensorPtr& a, double p);
    TensorPtr transpose(const TensorPtr& a);
    TensorPtr reshape(const TensorPtr& a, std::size_t rows, std::size_t cols);
    /// Row sums, n x m -> n x 1.
    TensorPtr row_sum(const TensorPtr& a);
    /// Sum of all entries, -> 1 x 1.
    TensorPtr sum(const TensorPtr& a);
    /// Mean squared difference over all entries, -> 1 x 1.
    TensorPtr mse(const TensorPtr& a, const TensorPtr& b);
    /// Select rows by index, duplicates allowed.
    TensorPtr gather_rows(const TensorPtr& a, std::vector<std::size_t> idx);
    /// Place row j of a at row idx[j] of an n_rows x cols zero matrix.
    /// Indices must be unique and in range.
    TensorPtr scatter_rows(const TensorPtr& a, std::vector<std::size_t> idx,
                           std::size_t n_rows);
    /// Contiguous block starting at (r0, c0).
    TensorPtr crop(const TensorPtr& a, std::size_t r0, std::size_t c0,
                   std::size_t rows, std::size_t cols);

    /// Reverse sweep from a scalar loss. Accumulates into the grads of
    /// every requires_grad leaf reachable from it. May be called more
    /// than once; contributions add up until grads are zeroed.
    void backward(const TensorPtr& loss);

    std::size_t size() const { return records_.size(); }

private:
    enum class Op {
        matmul, add, sub, mul, mul_scalar, scale, relu, sigmoid, abs, log,
        clamp, pow_const, transpose, reshape, row_sum, sum, mse,
        gather_rows, scatter_rows, crop,
    };

    struct Record {
        Op op;
        TensorPtr a, b, out;
        double c0 = 0.0, c1 = 0.0;
        std::vector<std::size_t> idx;
    };

    TensorPtr emit(Record rec, Matrix values);

    std::vector<Record> records_;
};

/// Result of comparing analytic gradients with central differences.
struct GradCheckReport {
    double max_rel_err = 0.0;
    std::size_t entries_checked = 0;
    bool pass = false;
};

/// Check d f / d x at x for a scalar-valued function built from tape
/// ops. Relative error is |analytic - numeric| / max(1, |analytic|,
/// |numeric|), so near-zero gradients are compared absolutely.
GradCheckReport grad_check(const std::function<TensorPtr(Tape&, const TensorPtr&)>& f,
                           const Matrix& x, double eps, double tol);

} // namespace agsr

#endif // AGSR_AUTODIFF_HPP
