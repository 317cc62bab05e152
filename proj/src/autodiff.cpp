#include "agsr/autodiff.hpp"

#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "agsr/errors.hpp"

namespace agsr {

namespace {

void check_finite(const Matrix& m, const char* who) {
    if (!all_finite(m))
        throw NumericalError(std::string(who) + ": produced a non-finite value");
}

} // namespace

TensorPtr make_tensor(Matrix values, bool requires_grad) {
    auto t = std::make_shared<Tensor>();
    t->values = std::move(values);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr make_param(Matrix values) { return make_tensor(std::move(values), true); }

void zero_grad(const TensorPtr& t) {
    t->grad = Matrix(t->values.rows(), t->values.cols());
}

TensorPtr Tape::constant(Matrix values) { return make_tensor(std::move(values), false); }

TensorPtr Tape::emit(Record rec, Matrix values) {
    check_finite(values, "tape forward");
    auto out = std::make_shared<Tensor>();
    out->values = std::move(values);
    out->requires_grad =
        (rec.a && rec.a->requires_grad) || (rec.b && rec.b->requires_grad);
    rec.out = out;
    records_.push_back(std::move(rec));
    return out;
}

TensorPtr Tape::matmul(const TensorPtr& a, const TensorPtr& b) {
    return emit({Op::matmul, a, b}, agsr::matmul(a->values, b->values));
}

TensorPtr Tape::add(const TensorPtr& a, const TensorPtr& b) {
    return emit({Op::add, a, b}, agsr::add(a->values, b->values));
}

TensorPtr Tape::sub(const TensorPtr& a, const TensorPtr& b) {
    return emit({Op::sub, a, b}, agsr::sub(a->values, b->values));
}

TensorPtr Tape::mul(const TensorPtr& a, const TensorPtr& b) {
    return emit({Op::mul, a, b}, agsr::hadamard(a->values, b->values));
}

TensorPtr Tape::mul_scalar(const TensorPtr& a, const TensorPtr& s) {
    if (s->rows() != 1 || s->cols() != 1)
        throw ShapeError("mul_scalar: multiplier must be 1x1");
    return emit({Op::mul_scalar, a, s}, agsr::scale(a->values, s->values(0, 0)));
}

TensorPtr Tape::scale(const TensorPtr& a, double c) {
    Record rec{Op::scale, a, nullptr};
    rec.c0 = c;
    return emit(std::move(rec), agsr::scale(a->values, c));
}

TensorPtr Tape::relu(const TensorPtr& a) {
    Matrix v = a->values;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v.data()[i] < 0.0) v.data()[i] = 0.0;
    return emit({Op::relu, a, nullptr}, std::move(v));
}

TensorPtr Tape::sigmoid(const TensorPtr& a) {
    Matrix v = a->values;
    for (std::size_t i = 0; i < v.size(); ++i)
        v.data()[i] = 1.0 / (1.0 + std::exp(-v.data()[i]));
    return emit({Op::sigmoid, a, nullptr}, std::move(v));
}

TensorPtr Tape::abs(const TensorPtr& a) {
    Matrix v = a->values;
    for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = std::fabs(v.data()[i]);
    return emit({Op::abs, a, nullptr}, std::move(v));
}

TensorPtr Tape::log(const TensorPtr& a) {
    Matrix v = a->values;
    for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = std::log(v.data()[i]);
    return emit({Op::log, a, nullptr}, std::move(v));
}

TensorPtr Tape::clamp(const TensorPtr& a, double lo, double hi) {
    if (!(lo <= hi)) throw ConfigError("clamp: lo must be <= hi");
    Matrix v = a->values;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v.data()[i] < lo) v.data()[i] = lo;
        if (v.data()[i] > hi) v.data()[i] = hi;
    }
    Record rec{Op::clamp, a, nullptr};
    rec.c0 = lo;
    rec.c1 = hi;
    return emit(std::move(rec), std::move(v));
}

TensorPtr Tape::pow_const(const TensorPtr& a, double p) {
    Matrix v = a->values;
    for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = std::pow(v.data()[i], p);
    Record rec{Op::pow_const, a, nullptr};
    rec.c0 = p;
    return emit(std::move(rec), std::move(v));
}

TensorPtr Tape::transpose(const TensorPtr& a) {
    return emit({Op::transpose, a, nullptr}, agsr::transpose(a->values));
}

TensorPtr Tape::reshape(const TensorPtr& a, std::size_t rows, std::size_t cols) {
    if (rows * cols != a->values.size())
        throw ShapeError("reshape: element count must be preserved");
    Matrix v(rows, cols);
    for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = a->values.data()[i];
    Record rec{Op::reshape, a, nullptr};
    return emit(std::move(rec), std::move(v));
}

TensorPtr Tape::row_sum(const TensorPtr& a) {
    Matrix v(a->rows(), 1);
    for (std::size_t i = 0; i < a->rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a->cols(); ++j) s += a->values(i, j);
        v(i, 0) = s;
    }
    return emit({Op::row_sum, a, nullptr}, std::move(v));
}

TensorPtr Tape::sum(const TensorPtr& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a->values.size(); ++i) s += a->values.data()[i];
    Matrix v(1, 1);
    v(0, 0) = s;
    return emit({Op::sum, a, nullptr}, std::move(v));
}

TensorPtr Tape::mse(const TensorPtr& a, const TensorPtr& b) {
    if (!a->values.same_shape(b->values)) throw ShapeError("mse: shape mismatch");
    if (a->values.size() == 0) throw ShapeError("mse: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < a->values.size(); ++i) {
        const double d = a->values.data()[i] - b->values.data()[i];
        s += d * d;
    }
    Matrix v(1, 1);
    v(0, 0) = s / static_cast<double>(a->values.size());
    return emit({Op::mse, a, b}, std::move(v));
}

TensorPtr Tape::gather_rows(const TensorPtr& a, std::vector<std::size_t> idx) {
    for (std::size_t i : idx)
        if (i >= a->rows()) throw IndexError("gather_rows: row index out of range");
    Matrix v(idx.size(), a->cols());
    for (std::size_t j = 0; j < idx.size(); ++j)
        for (std::size_t c = 0; c < a->cols(); ++c) v(j, c) = a->values(idx[j], c);
    Record rec{Op::gather_rows, a, nullptr};
    rec.idx = std::move(idx);
    return emit(std::move(rec), std::move(v));
}

TensorPtr Tape::scatter_rows(const TensorPtr& a, std::vector<std::size_t> idx,
                             std::size_t n_rows) {
    if (idx.size() != a->rows())
        throw IndexError("scatter_rows: one index per input row required");
    std::vector<bool> seen(n_rows, false);
    for (std::size_t i : idx) {
        if (i >= n_rows) throw IndexError("scatter_rows: row index out of range");
        if (seen[i]) throw IndexError("scatter_rows: duplicate row index");
        seen[i] = true;
    }
    Matrix v(n_rows, a->cols());
    for (std::size_t j = 0; j < idx.size(); ++j)
        for (std::size_t c = 0; c < a->cols(); ++c) v(idx[j], c) = a->values(j, c);
    Record rec{Op::scatter_rows, a, nullptr};
    rec.idx = std::move(idx);
    return emit(std::move(rec), std::move(v));
}

TensorPtr Tape::crop(const TensorPtr& a, std::size_t r0, std::size_t c0,
                     std::size_t rows, std::size_t cols) {
    if (r0 + rows > a->rows() || c0 + cols > a->cols())
        throw IndexError("crop: block exceeds input bounds");
    Matrix v(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) v(i, j) = a->values(r0 + i, c0 + j);
    Record rec{Op::crop, a, nullptr};
    rec.c0 = static_cast<double>(r0);
    rec.c1 = static_cast<double>(c0);
    return emit(std::move(rec), std::move(v));
}

void Tape::backward(const TensorPtr& loss) {
    if (!loss || loss->rows() != 1 || loss->cols() != 1)
        throw NotScalar("backward: loss must be 1x1");

    std::unordered_map<const Tensor*, Matrix> adjoint;
    std::unordered_set<const Tensor*> produced;
    for (const Record& rec : records_) produced.insert(rec.out.get());

    Matrix seed(1, 1);
    seed(0, 0) = 1.0;
    adjoint.emplace(loss.get(), std::move(seed));

    auto accumulate = [&](const TensorPtr& t, Matrix&& contribution) {
        check_finite(contribution, "tape backward");
        auto it = adjoint.find(t.get());
        if (it == adjoint.end()) {
            adjoint.emplace(t.get(), std::move(contribution));
        } else {
            Matrix& acc = it->second;
            for (std::size_t i = 0; i < acc.size(); ++i)
                acc.data()[i] += contribution.data()[i];
        }
    };
    // The adjoint of an input is only needed if gradients can flow past
    // it: it is a trainable leaf or an interior node of this tape.
    auto needed = [&](const TensorPtr& t) {
        return t->requires_grad || produced.count(t.get()) != 0;
    };

    std::vector<TensorPtr> leaves;
    std::unordered_set<const Tensor*> leaf_seen;
    auto note_leaf = [&](const TensorPtr& t) {
        if (t->requires_grad && produced.count(t.get()) == 0 &&
            leaf_seen.insert(t.get()).second)
            leaves.push_back(t);
    };
    note_leaf(loss);

    for (std::size_t r = records_.size(); r-- > 0;) {
        const Record& rec = records_[r];
        auto git = adjoint.find(rec.out.get());
        if (git == adjoint.end()) continue; // not on the path to the loss
        const Matrix g = git->second;

        const TensorPtr& a = rec.a;
        const TensorPtr& b = rec.b;
        if (a) note_leaf(a);
        if (b) note_leaf(b);

        switch (rec.op) {
        case Op::matmul:
            if (needed(a)) accumulate(a, agsr::matmul(g, agsr::transpose(b->values)));
            if (needed(b)) accumulate(b, agsr::matmul(agsr::transpose(a->values), g));
            break;
        case Op::add:
            if (needed(a)) accumulate(a, Matrix(g));
            if (needed(b)) accumulate(b, Matrix(g));
            break;
        case Op::sub:
            if (needed(a)) accumulate(a, Matrix(g));
            if (needed(b)) accumulate(b, agsr::scale(g, -1.0));
            break;
        case Op::mul:
            if (needed(a)) accumulate(a, agsr::hadamard(g, b->values));
            if (needed(b)) accumulate(b, agsr::hadamard(g, a->values));
            break;
        case Op::mul_scalar: {
            const double s = b->values(0, 0);
            if (needed(a)) accumulate(a, agsr::scale(g, s));
            if (needed(b)) {
                double acc = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i)
                    acc += g.data()[i] * a->values.data()[i];
                Matrix gs(1, 1);
                gs(0, 0) = acc;
                accumulate(b, std::move(gs));
            }
            break;
        }
        case Op::scale:
            if (needed(a)) accumulate(a, agsr::scale(g, rec.c0));
            break;
        case Op::relu:
            if (needed(a)) {
                Matrix ga = g;
                for (std::size_t i = 0; i < ga.size(); ++i)
                    if (a->values.data()[i] <= 0.0) ga.data()[i] = 0.0;
                accumulate(a, std::move(ga));
            }
            break;
        case Op::sigmoid:
            if (needed(a)) {
                Matrix ga = g;
                for (std::size_t i = 0; i < ga.size(); ++i) {
                    const double s = rec.out->values.data()[i];
                    ga.data()[i] *= s * (1.0 - s);
                }
                accumulate(a, std::move(ga));
            }
            break;
        case Op::abs:
            if (needed(a)) {
                Matrix ga = g;
                for (std::size_t i = 0; i < ga.size(); ++i) {
                    const double x = a->values.data()[i];
                    ga.data()[i] *= x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
                }
                accumulate(a, std::move(ga));
            }
            break;
        case Op::log:
            if (needed(a)) {
                Matrix ga = g;
                for (std::size_t i = 0; i < ga.size(); ++i)
                    ga.data()[i] /= a->values.data()[i];
                accumulate(a, std::move(ga));
            }
            break;
        case Op::clamp:
            if (needed(a)) {
                Matrix ga = g;
                for (std::size_t i = 0; i < ga.size(); ++i) {
                    const double x = a->values.data()[i];
                    if (!(x > rec.c0 && x < rec.c1)) ga.data()[i] = 0.0;
                }
                accumulate(a, std::move(ga));
            }
            break;
        case Op::pow_const:
            if (needed(a)) {
                Matrix ga = g;
                for (std::size_t i = 0; i < ga.size(); ++i)
                    ga.data()[i] *= rec.c0 * std::pow(a->values.data()[i], rec.c0 - 1.0);
                accumulate(a, std::move(ga));
            }
            break;
        case Op::transpose:
            if (needed(a)) accumulate(a, agsr::transpose(g));
            break;
        case Op::reshape:
            if (needed(a)) {
                Matrix ga(a->rows(), a->cols());
                for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] = g.data()[i];
                accumulate(a, std::move(ga));
            }
            break;
        case Op::row_sum:
            if (needed(a)) {
                Matrix ga(a->rows(), a->cols());
                for (std::size_t i = 0; i < a->rows(); ++i)
                    for (std::size_t j = 0; j < a->cols(); ++j) ga(i, j) = g(i, 0);
                accumulate(a, std::move(ga));
            }
            break;
        case Op::sum:
            if (needed(a)) accumulate(a, Matrix(a->rows(), a->cols(), g(0, 0)));
            break;
        case Op::mse: {
            const double c = 2.0 * g(0, 0) / static_cast<double>(a->values.size());
            if (needed(a) || needed(b)) {
                Matrix d = agsr::sub(a->values, b->values);
                if (needed(a)) accumulate(a, agsr::scale(d, c));
                if (needed(b)) accumulate(b, agsr::scale(d, -c));
            }
            break;
        }
        case Op::gather_rows:
            if (needed(a)) {
                Matrix ga(a->rows(), a->cols());
                for (std::size_t j = 0; j < rec.idx.size(); ++j)
                    for (std::size_t c = 0; c < a->cols(); ++c)
                        ga(rec.idx[j], c) += g(j, c);
                accumulate(a, std::move(ga));
            }
            break;
        case Op::scatter_rows:
            if (needed(a)) {
                Matrix ga(a->rows(), a->cols());
                for (std::size_t j = 0; j < rec.idx.size(); ++j)
                    for (std::size_t c = 0; c < a->cols(); ++c)
                        ga(j, c) = g(rec.idx[j], c);
                accumulate(a, std::move(ga));
            }
            break;
        case Op::crop:
            if (needed(a)) {
                Matrix ga(a->rows(), a->cols());
                const auto r0 = static_cast<std::size_t>(rec.c0);
                const auto c0 = static_cast<std::size_t>(rec.c1);
                for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < g.cols(); ++j)
                        ga(r0 + i, c0 + j) = g(i, j);
                accumulate(a, std::move(ga));
            }
            break;
        }
    }

    for (const TensorPtr& leaf : leaves) {
        auto it = adjoint.find(leaf.get());
        if (it == adjoint.end()) continue;
        if (leaf->grad.empty()) leaf->grad = Matrix(leaf->rows(), leaf->cols());
        for (std::size_t i = 0; i < leaf->grad.size(); ++i)
            leaf->grad.data()[i] += it->second.data()[i];
        check_finite(leaf->grad, "tape backward");
    }
}

GradCheckReport grad_check(const std::function<TensorPtr(Tape&, const TensorPtr&)>& f,
                           const Matrix& x, double eps, double tol) {
    Tape tape;
    TensorPtr xt = make_param(x);
    TensorPtr y = f(tape, xt);
    if (y->rows() != 1 || y->cols() != 1)
        throw NotScalar("grad_check: function must return a 1x1 tensor");
    tape.backward(y);
    Matrix analytic = xt->grad.empty() ? Matrix(x.rows(), x.cols()) : xt->grad;

    auto value_at = [&](const Matrix& point) {
        Tape t;
        TensorPtr p = make_param(point);
        return f(t, p)->values(0, 0);
    };

    GradCheckReport report;
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) {
            Matrix hi = x, lo = x;
            hi(i, j) += eps;
            lo(i, j) -= eps;
            const double numeric = (value_at(hi) - value_at(lo)) / (2.0 * eps);
            const double a = analytic(i, j);
            const double rel =
                std::fabs(a - numeric) /
                std::max({1.0, std::fabs(a), std::fabs(numeric)});
            report.max_rel_err = std::max(report.max_rel_err, rel);
            ++report.entries_checked;
        }
    report.pass = report.max_rel_err <= tol;
    return report;
}

} // namespace agsr
