#include "agsr/graph.hpp"

#include <atomic>
#include <cmath>
#include <numeric>
#include <algorithm>

#include "agsr/errors.hpp"

namespace agsr {

namespace {

std::atomic<std::uint64_t> g_eigen_calls{0};

void require_square(const Matrix& m, const char* who) {
    if (m.rows() != m.cols())
        throw ShapeError(std::string(who) + ": matrix must be square");
}

// Householder reduction of a symmetric matrix to tridiagonal form.
// On entry v holds the matrix; on exit v holds the accumulated
// orthogonal transform, d the diagonal and e the subdiagonal (e[0]
// unused). Follows the classic EISPACK/JAMA tred2 routine, zero based.
void tred2(Matrix& v, std::vector<double>& d, std::vector<double>& e) {
    const std::size_t n = v.rows();
    for (std::size_t j = 0; j < n; ++j) d[j] = v(n - 1, j);

    for (std::size_t i = n - 1; i > 0; --i) {
        // Scale to avoid under/overflow.
        double scale = 0.0;
        double h = 0.0;
        for (std::size_t k = 0; k < i; ++k) scale += std::fabs(d[k]);
        if (scale == 0.0) {
            e[i] = d[i - 1];
            for (std::size_t j = 0; j < i; ++j) {
                d[j] = v(i - 1, j);
                v(i, j) = 0.0;
                v(j, i) = 0.0;
            }
        } else {
            for (std::size_t k = 0; k < i; ++k) {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            double f = d[i - 1];
            double g = std::sqrt(h);
            if (f > 0) g = -g;
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;

            // Apply similarity transformation to remaining columns.
            for (std::size_t j = 0; j < i; ++j) {
                f = d[j];
                v(j, i) = f;
                g = e[j] + v(j, j) * f;
                for (std::size_t k = j + 1; k < i; ++k) {
                    g += v(k, j) * d[k];
                    e[k] += v(k, j) * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for (std::size_t j = 0; j < i; ++j) {
                e[j] /= h;
                f += e[j] * d[j];
            }
            const double hh = f / (h + h);
            for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
            for (std::size_t j = 0; j < i; ++j) {
                f = d[j];
                g = e[j];
                for (std::size_t k = j; k < i; ++k)
                    v(k, j) -= (f * e[k] + g * d[k]);
                d[j] = v(i - 1, j);
                v(i, j) = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    for (std::size_t i = 0; i + 1 < n; ++i) {
        v(n - 1, i) = v(i, i);
        v(i, i) = 1.0;
        const double h = d[i + 1];
        if (h != 0.0) {
            for (std::size_t k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
            for (std::size_t j = 0; j <= i; ++j) {
                double g = 0.0;
                for (std::size_t k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
                for (std::size_t k = 0; k <= i; ++k) v(k, j) -= g * d[k];
            }
        }
        for (std::size_t k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
    }
    for (std::size_t j = 0; j < n; ++j) {
        d[j] = v(n - 1, j);
        v(n - 1, j) = 0.0;
    }
    v(n - 1, n - 1) = 1.0;
    e[0] = 0.0;
}

// Implicitly shifted QL iteration on the tridiagonal form, accumulating
// eigenvectors into v. Zero-based EISPACK/JAMA tql2 with one addition:
// a global sweep budget of 30*n, exceeded only for pathological input.
void tql2(Matrix& v, std::vector<double>& d, std::vector<double>& e) {
    const std::size_t n = v.rows();
    for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;

    double f = 0.0;
    double tst1 = 0.0;
    const double eps = 0x1.0p-52;
    const std::size_t max_sweeps = 30 * n;
    std::size_t sweeps = 0;

    for (std::size_t l = 0; l < n; ++l) {
        tst1 = std::max(tst1, std::fabs(d[l]) + std::fabs(e[l]));
        std::size_t m = l;
        while (m < n) {
            if (std::fabs(e[m]) <= eps * tst1) break;
            ++m;
        }

        if (m > l) {
            do {
                if (++sweeps > max_sweeps)
                    throw EigenFailure("eigendecompose: QL iteration did not converge");

                // Implicit shift.
                double g = d[l];
                double p = (d[l + 1] - g) / (2.0 * e[l]);
                double r = std::hypot(p, 1.0);
                if (p < 0) r = -r;
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                const double dl1 = d[l + 1];
                double h = g - d[l];
                for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
                f += h;

                // QL transformation.
                p = d[m];
                double c = 1.0;
                double c2 = c;
                double c3 = c;
                const double el1 = e[l + 1];
                double s = 0.0;
                double s2 = 0.0;
                for (std::size_t i = m; i-- > l;) {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = std::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    // Accumulate the rotation into the eigenvectors.
                    for (std::size_t k = 0; k < n; ++k) {
                        h = v(k, i + 1);
                        v(k, i + 1) = s * v(k, i) + c * h;
                        v(k, i) = c * v(k, i) - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
            } while (std::fabs(e[l]) > eps * tst1);
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

} // namespace

WeightedGraph::WeightedGraph(Matrix adjacency) : n(adjacency.rows()), adj(std::move(adjacency)) {
    if (adj.rows() != adj.cols())
        throw InvalidGraph("WeightedGraph: adjacency must be square");
    if (!all_finite(adj))
        throw InvalidGraph("WeightedGraph: adjacency has non-finite entries");
    for (std::size_t i = 0; i < n; ++i) {
        if (adj(i, i) != 0.0)
            throw InvalidGraph("WeightedGraph: diagonal must be zero");
        for (std::size_t j = i + 1; j < n; ++j)
            if (adj(i, j) != adj(j, i))
                throw InvalidGraph("WeightedGraph: adjacency must be symmetric");
    }
}

Matrix symmetrize(const Matrix& m) {
    require_square(m, "symmetrize");
    Matrix s(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            s(i, j) = 0.5 * (m(i, j) + m(j, i));
    return s;
}

Matrix normalized_adjacency(const WeightedGraph& g) {
    if (!all_finite(g.adj))
        throw InvalidGraph("normalized_adjacency: non-finite entries");
    const std::size_t n = g.n;
    std::vector<double> dinv(n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 1.0; // unit self-loop
        for (std::size_t j = 0; j < n; ++j) deg += std::fabs(g.adj(i, j));
        dinv[i] = 1.0 / std::sqrt(deg);
    }
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double a_hat = g.adj(i, j) + (i == j ? 1.0 : 0.0);
            out(i, j) = dinv[i] * a_hat * dinv[j];
        }
    return out;
}

Matrix graph_laplacian(const WeightedGraph& g) {
    if (!all_finite(g.adj))
        throw InvalidGraph("graph_laplacian: non-finite entries");
    const std::size_t n = g.n;
    Matrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            deg += std::fabs(g.adj(i, j));
            l(i, j) = -g.adj(i, j);
        }
        l(i, i) = deg;
    }
    return l;
}

std::vector<double> node_strength(const WeightedGraph& g) {
    std::vector<double> s(g.n, 0.0);
    for (std::size_t i = 0; i < g.n; ++i)
        for (std::size_t j = 0; j < g.n; ++j) s[i] += std::fabs(g.adj(i, j));
    return s;
}

EigenDecomposition eigendecompose(const Matrix& sym) {
    g_eigen_calls.fetch_add(1, std::memory_order_relaxed);
    require_square(sym, "eigendecompose");
    const std::size_t n = sym.rows();
    if (n == 0) throw ShapeError("eigendecompose: empty matrix");
    if (!all_finite(sym))
        throw NumericalError("eigendecompose: non-finite entries");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::fabs(sym(i, j) - sym(j, i)) > 1e-12)
                throw NotSymmetric("eigendecompose: matrix not symmetric within 1e-12");

    Matrix v = sym;
    std::vector<double> d(n), e(n);
    tred2(v, d, e);
    tql2(v, d, e);

    // Ascending eigenvalue order, ties broken by original position.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
        if (d[a] != d[b]) return d[a] < d[b];
        return a < b;
    });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = perm[j];
        out.values[j] = d[src];

        // Fix the sign: largest-magnitude entry (first on ties) positive.
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = std::fabs(v(i, src));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        const double sgn = v(arg, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = sgn * v(i, src);
    }
    return out;
}

std::uint64_t eigendecompose_call_count() {
    return g_eigen_calls.load(std::memory_order_relaxed);
}

Matrix pad_isotropic(const Matrix& m, std::size_t target) {
    require_square(m, "pad_isotropic");
    if (target < m.rows())
        throw InvalidTarget("pad_isotropic: target smaller than input");
    const std::size_t off = (target - m.rows() + 1) / 2;
    Matrix out(target, target);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(off + i, off + j) = m(i, j);
    return out;
}

Matrix unpad_isotropic(const Matrix& m, std::size_t original) {
    require_square(m, "unpad_isotropic");
    if (original > m.rows())
        throw InvalidTarget("unpad_isotropic: original larger than input");
    const std::size_t off = (m.rows() - original + 1) / 2;
    Matrix out(original, original);
    for (std::size_t i = 0; i < original; ++i)
        for (std::size_t j = 0; j < original; ++j) out(i, j) = m(off + i, off + j);
    return out;
}

Matrix selection_matrix(std::size_t n, std::size_t k) {
    if (n == 0 || k == 0)
        throw ShapeError("selection_matrix: n and k must be positive");
    Matrix s(n * k, n);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t i = 0; i < n; ++i) s(c * n + i, i) = 1.0;
    return s;
}

} // namespace agsr
