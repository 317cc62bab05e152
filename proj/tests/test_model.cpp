#include <cmath>

#include <doctest.h>

#include "agsr/errors.hpp"
#include "agsr/model.hpp"

using namespace agsr;

namespace {

WeightedGraph random_graph(Rng& rng, std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = rng.uniform(-1.0, 1.0);
            m(i, j) = v;
            m(j, i) = v;
        }
    return WeightedGraph{std::move(m)};
}

SampleContext tiny_context(std::uint64_t seed, const ModelDims& dims) {
    Rng rng(seed);
    return make_sample_context("s", random_graph(rng, dims.n),
                               random_graph(rng, dims.n_h), dims);
}

const ModelDims kDims{4, 6, 2};

} // namespace

TEST_CASE("variant names round trip") {
    for (Variant v : all_variants()) CHECK(variant_from_name(variant_name(v)) == v);
    CHECK(variant_from_name("agsr-net") == Variant::agsr_net);
    CHECK_THROWS_AS(variant_from_name("resnet"), ConfigError);
}

TEST_CASE("only the adversarial variants train a discriminator") {
    CHECK(variant_adversarial(Variant::agsr_net));
    CHECK(variant_adversarial(Variant::gsr_autoencoder));
    CHECK_FALSE(variant_adversarial(Variant::gsr_net));
    CHECK_FALSE(variant_adversarial(Variant::gsr_layer));
    CHECK_FALSE(variant_adversarial(Variant::deep_gsr));
}

TEST_CASE("named parameters follow the serialization order per variant") {
    Rng rng(1);
    auto names = [&](Variant v) {
        const GeneratorParams p = make_generator(v, kDims, rng);
        std::vector<std::string> out;
        for (const auto& [name, t] : named_params(p)) out.push_back(name);
        return out;
    };
    CHECK(names(Variant::agsr_net) ==
          std::vector<std::string>{"gcn0.w", "enc1.u", "enc1.w", "enc2.u", "enc2.w",
                                   "dec1.w", "dec2.w", "gsr.w", "post1.w", "post2.w"});
    CHECK(names(Variant::gsr_net) == names(Variant::agsr_net));
    CHECK(names(Variant::gsr_autoencoder) ==
          std::vector<std::string>{"gcn0.w", "enc1.u", "enc1.w", "enc2.u", "enc2.w",
                                   "dec1.w", "dec2.w", "gsr.w"});
    CHECK(names(Variant::deep_gsr) ==
          std::vector<std::string>{"gcn0.w", "enc1.w", "gsr.w", "post1.w", "post2.w"});
    CHECK(names(Variant::gsr_layer) == std::vector<std::string>{"gsr.w"});
}

TEST_CASE("initialization is reproducible per seed") {
    Rng a(7), b(7), c(8);
    const GeneratorParams pa = make_generator(Variant::agsr_net, kDims, a);
    const GeneratorParams pb = make_generator(Variant::agsr_net, kDims, b);
    const GeneratorParams pc = make_generator(Variant::agsr_net, kDims, c);
    CHECK(bitwise_equal(pa.gcn0.weight->values, pb.gcn0.weight->values));
    CHECK(bitwise_equal(pa.gsr.weight->values, pb.gsr.weight->values));
    CHECK_FALSE(bitwise_equal(pa.gsr.weight->values, pc.gsr.weight->values));
}

TEST_CASE("initial weights stay within the fan-in bound") {
    Rng rng(3);
    const GeneratorParams p = make_generator(Variant::agsr_net, kDims, rng);
    const double bound = std::sqrt(1.0 / static_cast<double>(kDims.n));
    CHECK(max_abs(p.gcn0.weight->values) <= bound);
}

TEST_CASE("pool sizes halve twice with rounding up") {
    Rng rng(3);
    const GeneratorParams p = make_generator(Variant::agsr_net, ModelDims{5, 8, 2}, rng);
    CHECK(p.enc1_pool.keep == 3);
    CHECK(p.enc2_pool.keep == 2);
}

TEST_CASE("sample context carries the spectral factors") {
    const SampleContext ctx = tiny_context(10, kDims);
    CHECK(ctx.u0.vectors.rows() == 4);
    CHECK(ctx.u1.rows() == 8);
    CHECK(ctx.s_d.rows() == 8);
    CHECK(ctx.s_d.cols() == 4);
    CHECK(ctx.a_l_norm.rows() == 4);
    // Basis orthonormality, both resolutions.
    CHECK(frobenius_norm(sub(matmul(transpose(ctx.u1), ctx.u1), identity(8))) <= 1e-10);
}

TEST_CASE("sample context rejects mismatched graph sizes") {
    Rng rng(12);
    WeightedGraph lr = random_graph(rng, 5);
    WeightedGraph hr = random_graph(rng, 6);
    CHECK_THROWS_AS(make_sample_context("s", lr, hr, kDims), ConfigError);
    WeightedGraph hr_big = random_graph(rng, 9); // exceeds n*k = 8
    WeightedGraph lr_ok = random_graph(rng, 4);
    CHECK_THROWS_AS(make_sample_context("s", lr_ok, hr_big, ModelDims{4, 9, 2}),
                    ConfigError);
}

TEST_CASE("every variant predicts a symmetric HR matrix of the right size") {
    const SampleContext ctx = tiny_context(20, kDims);
    for (Variant v : all_variants()) {
        CAPTURE(variant_name(v));
        Rng rng(5);
        const GeneratorParams p = make_generator(v, kDims, rng);
        Tape t;
        const GeneratorOutput out = generator_forward(t, p, ctx);
        REQUIRE(out.z_h->rows() == 6);
        REQUIRE(out.z_h->cols() == 6);
        CHECK(max_abs_diff(out.z_h->values, transpose(out.z_h->values)) == 0.0);
        CHECK(all_finite(out.z_h->values));
        CHECK(out.a_h_tilde->rows() == 8);
    }
}

TEST_CASE("upsampling through the spectral basis hits the selection column") {
    // With the SR weight pinned to the target basis, lifting an LR
    // eigenvector and reading it back in that basis must reproduce the
    // corresponding 0/1 selection column.
    const SampleContext ctx = tiny_context(30, ModelDims{4, 8, 2});
    for (std::size_t j = 0; j < 4; ++j) {
        Matrix x(4, 1);
        for (std::size_t i = 0; i < 4; ++i) x(i, 0) = ctx.u0.vectors(i, j);
        const Matrix x_u =
            matmul(ctx.u1, matmul(ctx.s_d, matmul(transpose(ctx.u0.vectors), x)));
        const Matrix coeff = matmul(transpose(ctx.u1), x_u);
        for (std::size_t r = 0; r < 8; ++r) {
            const double expect = ctx.s_d(r, j);
            CHECK(std::fabs(coeff(r, 0) - expect) <= 1e-10);
        }
    }
}

TEST_CASE("discriminator squashes any HR matrix into (0,1)") {
    Rng rng(40);
    const DiscriminatorParams d = make_discriminator(6, rng, 16);
    const SampleContext ctx = tiny_context(41, kDims);
    Tape t;
    TensorPtr out = discriminator_forward(t, d, t.constant(ctx.hr.adj));
    REQUIRE(out->rows() == 1);
    REQUIRE(out->cols() == 1);
    CHECK(out->values(0, 0) > 0.0);
    CHECK(out->values(0, 0) < 1.0);
    CHECK_THROWS_AS(discriminator_forward(t, d, t.constant(Matrix(5, 5))), ShapeError);
}

TEST_CASE("loss terms scale mean squared error by row length") {
    Tape t;
    Matrix a(2, 3, 1.0);
    Matrix b(2, 3, 0.0);
    // mse = 1, row length 3: the row-distance convention gives 3.
    TensorPtr rec = loss_rec(t, t.constant(a), t.constant(b));
    CHECK(rec->values(0, 0) == doctest::Approx(3.0));

    Matrix pred(2, 2, 0.5);
    Matrix target(2, 2, 0.0);
    TensorPtr hr = loss_hr(t, t.constant(pred), target);
    CHECK(hr->values(0, 0) == doctest::Approx(0.25 * 2.0));
}

TEST_CASE("spectral alignment loss measures the SR weight against the basis") {
    Rng rng(50);
    GeneratorParams p = make_generator(Variant::gsr_layer, kDims, rng);
    const SampleContext ctx = tiny_context(51, kDims);
    Tape t;
    TensorPtr l = loss_eig(t, p, ctx.u1);
    const Matrix diff = sub(p.gsr.weight->values, ctx.u1);
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < diff.size(); ++i)
        sum_sq += diff.data()[i] * diff.data()[i];
    const double expect = 8.0 * sum_sq / static_cast<double>(diff.size());
    CHECK(l->values(0, 0) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("objective keeps only the terms a variant defines") {
    const SampleContext ctx = tiny_context(60, kDims);
    auto objective_for = [&](Variant v) {
        Rng rng(6);
        const GeneratorParams p = make_generator(v, kDims, rng);
        Tape t;
        const GeneratorOutput out = generator_forward(t, p, ctx);
        return generator_objective(t, p, out, ctx, 0.1);
    };
    const GeneratorObjective full = objective_for(Variant::agsr_net);
    CHECK(full.hr);
    CHECK(full.eig);
    CHECK(full.rec);
    CHECK(full.total->values(0, 0) ==
          doctest::Approx(full.hr->values(0, 0) + full.eig->values(0, 0) +
                          0.1 * full.rec->values(0, 0)));

    const GeneratorObjective layer_only = objective_for(Variant::gsr_layer);
    CHECK_FALSE(layer_only.hr);
    CHECK_FALSE(layer_only.rec);
    CHECK(layer_only.total->values(0, 0) == layer_only.eig->values(0, 0));

    const GeneratorObjective deep = objective_for(Variant::deep_gsr);
    CHECK_FALSE(deep.eig);
    CHECK(deep.total->values(0, 0) == deep.hr->values(0, 0));
}

TEST_CASE("adversarial losses match their closed forms") {
    Tape t;
    TensorPtr real = t.constant(Matrix(1, 1, 0.8));
    TensorPtr fake = t.constant(Matrix(1, 1, 0.3));
    TensorPtr ld = loss_d(t, real, fake);
    CHECK(ld->values(0, 0) ==
          doctest::Approx(-0.5 * (std::log(0.8) + std::log(0.7))).epsilon(1e-12));
    TensorPtr lg = loss_g_adv(t, fake);
    CHECK(lg->values(0, 0) == doctest::Approx(-std::log(0.3)).epsilon(1e-12));
}

TEST_CASE("adversarial losses survive saturated probabilities") {
    Tape t;
    TensorPtr one = t.constant(Matrix(1, 1, 1.0));
    TensorPtr zero = t.constant(Matrix(1, 1, 0.0));
    CHECK(all_finite(loss_d(t, one, one)->values));
    CHECK(all_finite(loss_d(t, zero, zero)->values));
    CHECK(all_finite(loss_g_adv(t, zero)->values));
}
