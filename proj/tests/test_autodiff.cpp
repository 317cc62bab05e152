#include <cmath>
#include <limits>

#include <doctest.h>

#include "agsr/autodiff.hpp"
#include "agsr/errors.hpp"
#include "agsr/rng.hpp"

using namespace agsr;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0,
                     double hi = 1.0) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = rng.uniform(lo, hi);
    return m;
}

constexpr double kEps = 1e-6;
constexpr double kTol = 1e-7;

} // namespace

TEST_CASE("grad check passes for every differentiable op") {
    Rng rng(2024);
    const Matrix x = random_matrix(rng, 3, 4);
    const Matrix w = random_matrix(rng, 4, 3);

    SUBCASE("matmul left and right") {
        auto left = [&](Tape& t, const TensorPtr& p) {
            return t.sum(t.matmul(p, t.constant(w)));
        };
        CHECK(grad_check(left, x, kEps, kTol).pass);
        auto right = [&](Tape& t, const TensorPtr& p) {
            return t.sum(t.matmul(t.constant(x), p));
        };
        CHECK(grad_check(right, w, kEps, kTol).pass);
    }
    SUBCASE("add sub mul") {
        const Matrix c = random_matrix(rng, 3, 4);
        auto f = [&](Tape& t, const TensorPtr& p) {
            TensorPtr tc = t.constant(c);
            return t.sum(t.mul(t.add(p, tc), t.sub(p, tc)));
        };
        CHECK(grad_check(f, x, kEps, kTol).pass);
    }
    SUBCASE("mul_scalar via both operands") {
        auto f = [&](Tape& t, const TensorPtr& p) {
            TensorPtr s = t.sum(p); // 1x1 derived from p itself
            return t.sum(t.mul_scalar(t.add(p, p), s));
        };
        CHECK(grad_check(f, x, kEps, kTol).pass);
    }
    SUBCASE("scale") {
        auto f = [&](Tape& t, const TensorPtr& p) { return t.sum(t.scale(p, -2.5)); };
        CHECK(grad_check(f, x, kEps, kTol).pass);
    }
    SUBCASE("relu away from the kink") {
        Matrix shifted = x;
        for (std::size_t i = 0; i < shifted.size(); ++i)
            shifted.data()[i] += (shifted.data()[i] >= 0.0 ? 0.5 : -0.5);
        auto f = [&](Tape& t, const TensorPtr& p) { return t.sum(t.relu(p)); };
        CHECK(grad_check(f, shifted, kEps, kTol).pass);
    }
    SUBCASE("sigmoid") {
        auto f = [&](Tape& t, const TensorPtr& p) { return t.sum(t.sigmoid(p)); };
        CHECK(grad_check(f, x, kEps, kTol).pass);
    }
    SUBCASE("abs away from zero") {
        Matrix shifted = x;
        for (std::size_t i = 0; i < shifted.size(); ++i)
            shifted.data()[i] += (shifted.data()[i] >= 0.0 ? 0.5 : -0.5);
        auto f = [&](Tape& t, const TensorPtr& p) { return t.sum(t.abs(p)); };
        CHECK(grad_check(f, shifted, kEps, kTol).pass);
    }
    SUBCASE("log on positive input") {
        const Matrix pos = random_matrix(rng, 3, 4, 0.5, 2.0);
        auto f = [&](Tape& t, const TensorPtr& p) { return t.sum(t.log(p)); };
        CHECK(grad_check(f, pos, kEps, kTol).pass);
    }
    SUBCASE("clamp interior") {
        auto f = [&](Tape& t, const TensorPtr& p) {
            return t.sum(t.clamp(p, -10.0, 10.0));
        };
        CHECK(grad_check(f, x, kEps, kTol).pass);
    }
    SUBCASE("pow_const") {
        const Matrix pos = random_matrix(rng, 3, 4, 0.5, 2.0);
        auto f = [&](Tape& t, const TensorPtr& p) {
            return t.sum(t.pow_const(p, -0.5));
        };
        CHECK(grad_check(f, pos, kEps, kTol).pass);
    }
    SUBCASE("transpose reshape crop") {
        auto f = [&](Tape& t, const TensorPtr& p) {
            TensorPtr r = t.reshape(t.transpose(p), 2, 6);
            return t.sum(t.crop(r, 0, 1, 2, 4));
        };
        CHECK(grad_check(f, x, kEps, kTol).pass);
    }
    SUBCASE("row_sum") {
        auto f = [&](Tape& t, const TensorPtr& p) {
            TensorPtr rs = t.row_sum(p);
            return t.sum(t.mul(rs, rs));
        };
        CHECK(grad_check(f, x, kEps, kTol).pass);
    }
    SUBCASE("mse") {
        const Matrix target = random_matrix(rng, 3, 4);
        auto f = [&](Tape& t, const TensorPtr& p) {
            return t.mse(p, t.constant(target));
        };
        CHECK(grad_check(f, x, kEps, kTol).pass);
    }
    SUBCASE("gather then scatter") {
        auto f = [&](Tape& t, const TensorPtr& p) {
            TensorPtr g = t.gather_rows(p, {2, 0, 2}); // duplicates allowed
            TensorPtr s = t.scatter_rows(t.gather_rows(p, {1, 2}), {0, 3}, 5);
            return t.add(t.sum(t.mul(g, g)), t.sum(t.mul(s, s)));
        };
        CHECK(grad_check(f, x, kEps, kTol).pass);
    }
}

TEST_CASE("forward values are computed eagerly and exactly") {
    Tape t;
    Matrix a(2, 2);
    a(0, 0) = 1.0;
    a(0, 1) = 2.0;
    a(1, 0) = 3.0;
    a(1, 1) = 4.0;
    TensorPtr ta = t.constant(a);
    CHECK(t.sum(ta)->values(0, 0) == 10.0);
    CHECK(t.row_sum(ta)->values(0, 0) == 3.0);
    CHECK(t.row_sum(ta)->values(1, 0) == 7.0);
    TensorPtr m = t.mse(ta, t.constant(Matrix(2, 2)));
    CHECK(m->values(0, 0) == doctest::Approx(30.0 / 4.0));
    CHECK(t.clamp(ta, 1.5, 3.5)->values(1, 1) == 3.5);
}

TEST_CASE("gradients accumulate until zeroed") {
    Tape t;
    TensorPtr x = make_param(Matrix(2, 2, 1.0));
    TensorPtr loss = t.sum(t.mul(x, x)); // d/dx = 2x = 2
    t.backward(loss);
    CHECK(x->grad(0, 0) == 2.0);
    t.backward(loss);
    CHECK(x->grad(0, 0) == 4.0); // second sweep adds on top
    zero_grad(x);
    CHECK(x->grad(0, 0) == 0.0);
    t.backward(loss);
    CHECK(x->grad(0, 0) == 2.0);
}

TEST_CASE("backward requires a scalar") {
    Tape t;
    TensorPtr x = make_param(Matrix(2, 2, 1.0));
    TensorPtr y = t.add(x, x);
    CHECK_THROWS_AS(t.backward(y), NotScalar);
}

TEST_CASE("non-finite forward values raise immediately") {
    Tape t;
    TensorPtr z = t.constant(Matrix(1, 1, 0.0));
    CHECK_THROWS_AS(t.log(z), NumericalError); // log 0 = -inf
    TensorPtr big = t.constant(Matrix(1, 1, 1e308));
    CHECK_THROWS_AS(t.mul(big, big), NumericalError); // overflow to inf
}

TEST_CASE("constants detach: a value smuggled around the tape fails the check") {
    // f uses x's values through a constant, so the analytic gradient
    // misses half of the true derivative of x^2. grad_check must flag it.
    Matrix x(1, 1, 1.0);
    auto f = [](Tape& t, const TensorPtr& p) {
        return t.sum(t.mul(p, t.constant(p->values)));
    };
    const GradCheckReport r = grad_check(f, x, kEps, kTol);
    CHECK_FALSE(r.pass);
    CHECK(r.max_rel_err > 0.1);
}

TEST_CASE("grad check accepts an x-independent gradient of zero") {
    Matrix x(2, 2, 0.7);
    auto f = [](Tape& t, const TensorPtr& p) { return t.mse(p, p); };
    const GradCheckReport r = grad_check(f, x, kEps, kTol);
    CHECK(r.pass);
    CHECK(r.max_rel_err == 0.0);
    CHECK(r.entries_checked == 4);
}

TEST_CASE("relu and abs subgradient at zero is zero") {
    Tape t;
    TensorPtr x = make_param(Matrix(1, 2, 0.0));
    t.backward(t.sum(t.relu(x)));
    CHECK(x->grad(0, 0) == 0.0);
    zero_grad(x);
    t.backward(t.sum(t.abs(x)));
    CHECK(x->grad(0, 1) == 0.0);
}

TEST_CASE("clamp gradient vanishes outside the open interval") {
    Tape t;
    Matrix v(1, 3);
    v(0, 0) = -2.0; // below
    v(0, 1) = 0.5;  // inside
    v(0, 2) = 1.0;  // exactly at the boundary
    TensorPtr x = make_param(v);
    t.backward(t.sum(t.clamp(x, 0.0, 1.0)));
    CHECK(x->grad(0, 0) == 0.0);
    CHECK(x->grad(0, 1) == 1.0);
    CHECK(x->grad(0, 2) == 0.0);
}

TEST_CASE("scatter rejects duplicate or out-of-range indices") {
    Tape t;
    TensorPtr x = t.constant(Matrix(2, 3, 1.0));
    CHECK_THROWS_AS(t.scatter_rows(x, {1, 1}, 4), IndexError);
    CHECK_THROWS_AS(t.scatter_rows(x, {0, 9}, 4), IndexError);
    CHECK_THROWS_AS(t.gather_rows(x, {5}), IndexError);
}

TEST_CASE("shape mismatches are rejected") {
    Tape t;
    TensorPtr a = t.constant(Matrix(2, 3));
    TensorPtr b = t.constant(Matrix(3, 2));
    CHECK_THROWS_AS(t.add(a, b), ShapeError);
    CHECK_THROWS_AS(t.mul(a, b), ShapeError);
    CHECK_THROWS_AS(t.mse(a, b), ShapeError);
    CHECK_THROWS_AS(t.matmul(a, t.constant(Matrix(2, 2))), ShapeError);
    CHECK_THROWS_AS(t.reshape(a, 4, 4), ShapeError);
    CHECK_THROWS_AS(t.crop(a, 1, 1, 3, 3), IndexError);
    CHECK_THROWS_AS(t.mul_scalar(a, b), ShapeError);
}

TEST_CASE("gradients flow through a small composite expression") {
    // loss = mse(sigmoid(x w), y), checked against finite differences
    // through every parameter of a 1-layer network.
    Rng rng(9);
    const Matrix x = random_matrix(rng, 4, 3);
    const Matrix y = random_matrix(rng, 4, 2, 0.0, 1.0);
    const Matrix w0 = random_matrix(rng, 3, 2);
    auto f = [&](Tape& t, const TensorPtr& w) {
        return t.mse(t.sigmoid(t.matmul(t.constant(x), w)), t.constant(y));
    };
    const GradCheckReport r = grad_check(f, w0, kEps, kTol);
    CHECK(r.pass);
    CHECK(r.entries_checked == 6);
}
