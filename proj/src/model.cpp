#include "agsr/model.hpp"

#include <cmath>

#include "agsr/errors.hpp"

namespace agsr {

namespace {

Matrix uniform_matrix(Rng& rng, std::size_t rows, std::size_t cols, std::size_t fan_in) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i)
        m.data()[i] = rng.uniform(-bound, bound);
    return m;
}

std::size_t pad_offset(const ModelDims& dims) {
    return (dims.nk() - dims.n_h + 1) / 2;
}

void check_dims(const ModelDims& dims) {
    if (dims.n == 0 || dims.n_h == 0 || dims.k == 0)
        throw ConfigError("model dims must be positive");
    if (dims.nk() < dims.n_h)
        throw ConfigError("n*k must be at least the HR node count");
}

TensorPtr sym(Tape& tape, const TensorPtr& m) {
    return tape.scale(tape.add(m, tape.transpose(m)), 0.5);
}

/// Two pool+GCN encoder levels, then two unpool+GCN decoder levels
/// mirroring them (no skip connections). Returns the reconstructed
/// full-resolution embedding.
TensorPtr uae_embed(Tape& tape, const GeneratorParams& p, const WeightedGraph& a_l,
                    const TensorPtr& a_l_norm, const TensorPtr& z0,
                    std::vector<double>& margins) {
    PoolResult p1 = pool_forward(tape, p.enc1_pool, a_l.adj, z0);
    margins.push_back(p1.margin);
    const Matrix a1_norm = normalized_adjacency(WeightedGraph(p1.adjacency));
    TensorPtr h1 = gcn_forward(tape, p.enc1_gcn, tape.constant(a1_norm), p1.features,
                               Activation::relu);

    PoolResult p2 = pool_forward(tape, p.enc2_pool, p1.adjacency, h1);
    margins.push_back(p2.margin);
    const Matrix a2_norm = normalized_adjacency(WeightedGraph(p2.adjacency));
    TensorPtr h2 = gcn_forward(tape, p.enc2_gcn, tape.constant(a2_norm), p2.features,
                               Activation::relu);

    UnpoolLayer up1{p2.indices, p1.indices.size()};
    TensorPtr d1 = gcn_forward(tape, p.dec1_gcn, tape.constant(a1_norm),
                               unpool_forward(tape, up1, h2), Activation::relu);

    UnpoolLayer up2{p1.indices, a_l.n};
    return gcn_forward(tape, p.dec2_gcn, a_l_norm,
                       unpool_forward(tape, up2, d1), Activation::relu);
}

/// Shared tail: refine the padded prediction, unpad, symmetrize.
void finish_prediction(Tape& tape, const ModelDims& dims, const TensorPtr& z_h_padded,
                       GeneratorOutput& out) {
    const std::size_t off = pad_offset(dims);
    out.z_h_padded = z_h_padded;
    out.z_h = sym(tape, tape.crop(z_h_padded, off, off, dims.n_h, dims.n_h));
}

} // namespace

const char* variant_name(Variant v) {
    switch (v) {
    case Variant::gsr_layer: return "gsr-layer";
    case Variant::deep_gsr: return "deep-gsr";
    case Variant::gsr_autoencoder: return "gsr-ae";
    case Variant::gsr_net: return "gsr-net";
    case Variant::agsr_net: return "agsr-net";
    }
    throw ConfigError("variant_name: unknown variant");
}

Variant variant_from_name(const std::string& name) {
    for (Variant v : all_variants())
        if (name == variant_name(v)) return v;
    throw ConfigError("unknown variant: " + name);
}

bool variant_adversarial(Variant v) {
    return v == Variant::agsr_net || v == Variant::gsr_autoencoder;
}

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> v = {
        Variant::gsr_layer, Variant::deep_gsr, Variant::gsr_autoencoder,
        Variant::gsr_net, Variant::agsr_net};
    return v;
}

GeneratorParams make_generator(Variant variant, ModelDims dims, Rng& rng) {
    check_dims(dims);
    const std::size_t n = dims.n;
    const std::size_t nk = dims.nk();

    const bool has_gcn0 = variant != Variant::gsr_layer;
    const bool has_uae = variant == Variant::gsr_autoencoder ||
                         variant == Variant::gsr_net || variant == Variant::agsr_net;
    const bool deep = variant == Variant::deep_gsr;
    const bool has_post = deep || variant == Variant::gsr_net ||
                          variant == Variant::agsr_net;

    GeneratorParams p;
    p.variant = variant;
    p.dims = dims;

    // Parameters are drawn in serialization order so a (variant, seed)
    // pair always yields the same initialization.
    if (has_gcn0) p.gcn0.weight = make_param(uniform_matrix(rng, n, nk, n));
    if (has_uae) {
        p.enc1_pool.keep = (n + 1) / 2;
        p.enc1_pool.projection = make_param(uniform_matrix(rng, nk, 1, nk));
        p.enc1_gcn.weight = make_param(uniform_matrix(rng, nk, nk, nk));
        p.enc2_pool.keep = (p.enc1_pool.keep + 1) / 2;
        p.enc2_pool.projection = make_param(uniform_matrix(rng, nk, 1, nk));
        p.enc2_gcn.weight = make_param(uniform_matrix(rng, nk, nk, nk));
        p.dec1_gcn.weight = make_param(uniform_matrix(rng, nk, nk, nk));
        p.dec2_gcn.weight = make_param(uniform_matrix(rng, nk, nk, nk));
    } else if (deep) {
        // The second pre-SR convolution reuses the enc1 slot.
        p.enc1_gcn.weight = make_param(uniform_matrix(rng, nk, nk, nk));
    }
    p.gsr.weight = make_param(uniform_matrix(rng, nk, nk, nk));
    if (has_post) {
        p.post1.weight = make_param(uniform_matrix(rng, nk, nk, nk));
        p.post2.weight = make_param(uniform_matrix(rng, nk, nk, nk));
    }
    return p;
}

DiscriminatorParams make_discriminator(std::size_t n_h, Rng& rng, std::size_t hidden) {
    if (n_h == 0 || hidden == 0)
        throw ConfigError("make_discriminator: sizes must be positive");
    DiscriminatorParams d;
    d.n_h = n_h;
    d.hidden = hidden;
    const std::size_t in = n_h * n_h;
    d.w1 = make_param(uniform_matrix(rng, in, hidden, in));
    d.b1 = make_param(Matrix(1, hidden));
    d.w2 = make_param(uniform_matrix(rng, hidden, 1, hidden));
    d.b2 = make_param(Matrix(1, 1));
    return d;
}

std::vector<std::pair<std::string, TensorPtr>> named_params(const GeneratorParams& p) {
    std::vector<std::pair<std::string, TensorPtr>> out;
    auto push = [&](const char* name, const TensorPtr& t) {
        if (t) out.emplace_back(name, t);
    };
    push("gcn0.w", p.gcn0.weight);
    push("enc1.u", p.enc1_pool.projection);
    push("enc1.w", p.enc1_gcn.weight);
    push("enc2.u", p.enc2_pool.projection);
    push("enc2.w", p.enc2_gcn.weight);
    push("dec1.w", p.dec1_gcn.weight);
    push("dec2.w", p.dec2_gcn.weight);
    push("gsr.w", p.gsr.weight);
    push("post1.w", p.post1.weight);
    push("post2.w", p.post2.weight);
    return out;
}

std::vector<std::pair<std::string, TensorPtr>> named_params(const DiscriminatorParams& p) {
    return {{"disc.w1", p.w1}, {"disc.b1", p.b1}, {"disc.w2", p.w2}, {"disc.b2", p.b2}};
}

SampleContext make_sample_context(std::string id, WeightedGraph lr, WeightedGraph hr,
                                  const ModelDims& dims) {
    check_dims(dims);
    if (lr.n != dims.n)
        throw ConfigError("sample " + id + ": LR size does not match configuration");
    if (hr.n != dims.n_h)
        throw ConfigError("sample " + id + ": HR size does not match configuration");

    SampleContext ctx;
    ctx.id = std::move(id);
    ctx.a_l_norm = normalized_adjacency(lr);
    ctx.u0 = eigendecompose(graph_laplacian(lr));
    const WeightedGraph padded(pad_isotropic(hr.adj, dims.nk()));
    ctx.u1 = eigendecompose(graph_laplacian(padded)).vectors;
    ctx.s_d = selection_matrix(dims.n, dims.k);
    ctx.lr = std::move(lr);
    ctx.hr = std::move(hr);
    return ctx;
}

GeneratorOutput srg_forward(Tape& tape, const GeneratorParams& params,
                            const WeightedGraph& a_l, const EigenDecomposition& u0) {
    const ModelDims& dims = params.dims;
    check_dims(dims);
    if (a_l.n != dims.n)
        throw ConfigError("srg_forward: graph size does not match model dims");

    GeneratorOutput out;
    TensorPtr a_l_norm = tape.constant(normalized_adjacency(a_l));
    TensorPtr x0 = tape.constant(identity(dims.n));
    out.z0 = gcn_forward(tape, params.gcn0, a_l_norm, x0, Activation::relu);
    out.z_l = uae_embed(tape, params, a_l, a_l_norm, out.z0, out.pool_margins);

    const Matrix s_d = selection_matrix(dims.n, dims.k);
    GsrOutput g = gsr_forward(tape, params.gsr, out.z_l, u0.vectors, s_d);
    out.a_h_tilde = g.a_h;
    out.x_h_tilde = g.x_h;

    TensorPtr a_norm = normalized_adjacency_t(tape, g.a_h);
    TensorPtr h = gcn_forward(tape, params.post1, a_norm, g.x_h, Activation::relu);
    TensorPtr z_h_padded = gcn_forward(tape, params.post2, a_norm, h, Activation::none);
    finish_prediction(tape, dims, z_h_padded, out);
    return out;
}

GeneratorOutput generator_forward(Tape& tape, const GeneratorParams& params,
                                  const SampleContext& ctx) {
    const ModelDims& dims = params.dims;
    switch (params.variant) {
    case Variant::gsr_net:
    case Variant::agsr_net:
        return srg_forward(tape, params, ctx.lr, ctx.u0);

    case Variant::gsr_autoencoder: {
        GeneratorOutput out;
        TensorPtr a_l_norm = tape.constant(ctx.a_l_norm);
        TensorPtr x0 = tape.constant(identity(dims.n));
        out.z0 = gcn_forward(tape, params.gcn0, a_l_norm, x0, Activation::relu);
        out.z_l = uae_embed(tape, params, ctx.lr, a_l_norm, out.z0, out.pool_margins);
        GsrOutput g = gsr_forward(tape, params.gsr, out.z_l, ctx.u0.vectors, ctx.s_d);
        out.a_h_tilde = g.a_h;
        out.x_h_tilde = g.x_h;
        finish_prediction(tape, dims, g.x_h, out);
        return out;
    }

    case Variant::gsr_layer: {
        GeneratorOutput out;
        out.z_l = tape.constant(transpose(ctx.s_d));
        GsrOutput g = gsr_forward(tape, params.gsr, out.z_l, ctx.u0.vectors, ctx.s_d);
        out.a_h_tilde = g.a_h;
        out.x_h_tilde = g.x_h;
        finish_prediction(tape, dims, g.x_h, out);
        return out;
    }

    case Variant::deep_gsr: {
        GeneratorOutput out;
        TensorPtr a_l_norm = tape.constant(ctx.a_l_norm);
        TensorPtr x0 = tape.constant(identity(dims.n));
        TensorPtr h0 = gcn_forward(tape, params.gcn0, a_l_norm, x0, Activation::relu);
        out.z_l = gcn_forward(tape, params.enc1_gcn, a_l_norm, h0, Activation::relu);
        GsrOutput g = gsr_forward(tape, params.gsr, out.z_l, ctx.u0.vectors, ctx.s_d);
        out.a_h_tilde = g.a_h;
        out.x_h_tilde = g.x_h;
        TensorPtr a_norm = normalized_adjacency_t(tape, g.a_h);
        TensorPtr h = gcn_forward(tape, params.post1, a_norm, g.x_h, Activation::relu);
        TensorPtr emb = gcn_forward(tape, params.post2, a_norm, h, Activation::none);
        TensorPtr dec = sym(tape, tape.matmul(emb, tape.transpose(emb)));
        finish_prediction(tape, dims, dec, out);
        return out;
    }
    }
    throw ConfigError("generator_forward: unknown variant");
}

TensorPtr discriminator_forward(Tape& tape, const DiscriminatorParams& d,
                                const TensorPtr& m) {
    if (m->rows() != d.n_h || m->cols() != d.n_h)
        throw ShapeError("discriminator_forward: input must be n_h x n_h");
    TensorPtr flat = tape.reshape(m, 1, d.n_h * d.n_h);
    TensorPtr h = tape.relu(tape.add(tape.matmul(flat, d.w1), d.b1));
    return tape.sigmoid(tape.add(tape.matmul(h, d.w2), d.b2));
}

TensorPtr loss_rec(Tape& tape, const TensorPtr& z0, const TensorPtr& z_l) {
    return tape.scale(tape.mse(z0, z_l), static_cast<double>(z0->cols()));
}

TensorPtr loss_eig(Tape& tape, const GeneratorParams& params, const Matrix& u1) {
    return tape.scale(tape.mse(params.gsr.weight, tape.constant(u1)),
                      static_cast<double>(u1.cols()));
}

TensorPtr loss_hr(Tape& tape, const TensorPtr& z_h, const Matrix& a_h) {
    return tape.scale(tape.mse(z_h, tape.constant(a_h)),
                      static_cast<double>(a_h.cols()));
}

TensorPtr loss_g(Tape& tape, const GeneratorParams& params, const GeneratorOutput& out,
                 const SampleContext& ctx, double lambda) {
    TensorPtr l = tape.add(loss_hr(tape, out.z_h, ctx.hr.adj),
                           loss_eig(tape, params, ctx.u1));
    return tape.add(l, tape.scale(loss_rec(tape, out.z0, out.z_l), lambda));
}

GeneratorObjective generator_objective(Tape& tape, const GeneratorParams& params,
                                       const GeneratorOutput& out,
                                       const SampleContext& ctx, double lambda) {
    GeneratorObjective obj;
    switch (params.variant) {
    case Variant::gsr_layer:
        obj.eig = loss_eig(tape, params, ctx.u1);
        obj.total = obj.eig;
        break;
    case Variant::deep_gsr:
        obj.hr = loss_hr(tape, out.z_h, ctx.hr.adj);
        obj.total = obj.hr;
        break;
    default:
        obj.hr = loss_hr(tape, out.z_h, ctx.hr.adj);
        obj.eig = loss_eig(tape, params, ctx.u1);
        obj.rec = loss_rec(tape, out.z0, out.z_l);
        obj.total = tape.add(tape.add(obj.hr, obj.eig), tape.scale(obj.rec, lambda));
        break;
    }
    return obj;
}

TensorPtr generator_loss(Tape& tape, const GeneratorParams& params,
                         const GeneratorOutput& out, const SampleContext& ctx,
                         double lambda) {
    return generator_objective(tape, params, out, ctx, lambda).total;
}

namespace {
constexpr double kProbEps = 1e-12;

TensorPtr safe_log(Tape& tape, const TensorPtr& p) {
    return tape.log(tape.clamp(p, kProbEps, 1.0 - kProbEps));
}
} // namespace

TensorPtr loss_d(Tape& tape, const TensorPtr& d_real, const TensorPtr& d_fake) {
    Matrix one(1, 1, 1.0);
    TensorPtr miss = tape.sub(tape.constant(std::move(one)),
                              tape.clamp(d_fake, kProbEps, 1.0 - kProbEps));
    TensorPtr sum = tape.add(safe_log(tape, d_real), tape.log(miss));
    return tape.scale(sum, -0.5);
}

TensorPtr loss_g_adv(Tape& tape, const TensorPtr& d_fake) {
    return tape.scale(safe_log(tape, d_fake), -1.0);
}

} // namespace agsr
