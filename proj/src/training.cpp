#include "agsr/training.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>

#include "agsr/errors.hpp"
#include "agsr/rng.hpp"
#include "agsr/textio.hpp"

namespace agsr {

namespace {

using NamedParams = std::vector<std::pair<std::string, TensorPtr>>;

void zero_grads(const NamedParams& params) {
    for (const auto& [name, t] : params) zero_grad(t);
}

} // namespace

AdamState make_adam(const NamedParams& params, double lr) {
    AdamState st;
    st.lr = lr;
    st.m.reserve(params.size());
    st.v.reserve(params.size());
    for (const auto& [name, t] : params) {
        st.m.emplace_back(t->rows(), t->cols());
        st.v.emplace_back(t->rows(), t->cols());
    }
    return st;
}

void adam_step(AdamState& st, const NamedParams& params) {
    if (st.m.size() != params.size() || st.v.size() != params.size())
        throw ConfigError("adam_step: optimizer state does not match parameters");

    const std::uint64_t t = st.t + 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(t));

    // Stage every update first so a numerical failure leaves the
    // parameters and moments untouched.
    std::vector<Matrix> new_m(params.size()), new_v(params.size()),
        new_p(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const TensorPtr& p = params[i].second;
        if (!st.m[i].same_shape(p->values))
            throw ConfigError("adam_step: state shape mismatch for " + params[i].first);
        const Matrix zero =
            p->grad.empty() ? Matrix(p->rows(), p->cols()) : Matrix();
        const Matrix& g = p->grad.empty() ? zero : p->grad;
        if (!all_finite(g))
            throw NumericalError("adam_step: non-finite gradient for " +
                                 params[i].first);
        Matrix m(p->rows(), p->cols()), v(p->rows(), p->cols()),
            np(p->rows(), p->cols());
        for (std::size_t e = 0; e < g.size(); ++e) {
            const double ge = g.data()[e];
            m.data()[e] = st.beta1 * st.m[i].data()[e] + (1.0 - st.beta1) * ge;
            v.data()[e] = st.beta2 * st.v[i].data()[e] + (1.0 - st.beta2) * ge * ge;
            const double m_hat = m.data()[e] / bc1;
            const double v_hat = v.data()[e] / bc2;
            np.data()[e] =
                p->values.data()[e] - st.lr * m_hat / (std::sqrt(v_hat) + st.eps);
        }
        if (!all_finite(np))
            throw NumericalError("adam_step: non-finite update for " + params[i].first);
        new_m[i] = std::move(m);
        new_v[i] = std::move(v);
        new_p[i] = std::move(np);
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        st.m[i] = std::move(new_m[i]);
        st.v[i] = std::move(new_v[i]);
        params[i].second->values = std::move(new_p[i]);
    }
    st.t = t;
}

TrainedModel init_model(const TrainConfig& config, ModelDims dims) {
    if (dims.k != config.k)
        throw ConfigError("init_model: config.k does not match dims.k");
    TrainedModel model;
    Rng rng(config.seed);
    model.gen = make_generator(config.variant, dims, rng);
    model.adam_g = make_adam(named_params(model.gen), config.lr);
    if (variant_adversarial(config.variant)) {
        model.disc = make_discriminator(dims.n_h, rng, config.disc_hidden);
        model.adam_d = make_adam(named_params(*model.disc), config.lr);
    }
    return model;
}

std::vector<SampleContext> prepare_samples(const std::vector<SamplePair>& pairs,
                                           const ModelDims& dims) {
    std::vector<SampleContext> out;
    out.reserve(pairs.size());
    for (const SamplePair& p : pairs)
        out.push_back(make_sample_context(p.id, p.lr, p.hr, dims));
    return out;
}

EpochMetrics train_epoch(TrainedModel& model, const std::vector<SampleContext>& samples,
                         const TrainConfig& config, std::size_t epoch_index) {
    if (samples.empty())
        throw InsufficientSamples("train_epoch: no training samples");
    const bool adversarial = model.disc.has_value();
    const NamedParams gen_params = named_params(model.gen);
    const NamedParams disc_params =
        adversarial ? named_params(*model.disc) : NamedParams{};

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(mix_seed(config.seed, epoch_index));
    shuffle_rng.shuffle(order);

    EpochMetrics sums;
    for (std::size_t idx : order) {
        const SampleContext& ctx = samples[idx];

        if (adversarial) {
            // Discriminator step. The fake is detached: only its values
            // enter this tape, so no gradient reaches the generator.
            Tape fwd;
            GeneratorOutput fake = generator_forward(fwd, model.gen, ctx);
            Tape td;
            TensorPtr d_real =
                discriminator_forward(td, *model.disc, td.constant(ctx.hr.adj));
            TensorPtr d_fake = discriminator_forward(
                td, *model.disc, td.constant(fake.z_h->values));
            TensorPtr ld = loss_d(td, d_real, d_fake);
            zero_grads(disc_params);
            td.backward(ld);
            adam_step(model.adam_d, disc_params);
            sums.loss_d += ld->values(0, 0);
        }

        // Generator step on a fresh forward pass.
        Tape tg;
        GeneratorOutput out = generator_forward(tg, model.gen, ctx);
        GeneratorObjective obj =
            generator_objective(tg, model.gen, out, ctx, config.lambda);
        TensorPtr total = obj.total;
        if (adversarial) {
            TensorPtr d_fake = discriminator_forward(tg, *model.disc, out.z_h);
            TensorPtr adv = loss_g_adv(tg, d_fake);
            total = tg.add(total, adv);
            sums.loss_g_adv += adv->values(0, 0);
        }
        zero_grads(gen_params);
        tg.backward(total);
        adam_step(model.adam_g, gen_params);

        sums.loss_g += obj.total->values(0, 0);
        if (obj.hr) sums.loss_hr += obj.hr->values(0, 0);
        if (obj.eig) sums.loss_eig += obj.eig->values(0, 0);
        if (obj.rec) sums.loss_rec += obj.rec->values(0, 0);
    }

    const double inv = 1.0 / static_cast<double>(samples.size());
    EpochMetrics mean;
    mean.loss_g = sums.loss_g * inv;
    mean.loss_hr = sums.loss_hr * inv;
    mean.loss_eig = sums.loss_eig * inv;
    mean.loss_rec = sums.loss_rec * inv;
    mean.loss_d = sums.loss_d * inv;
    mean.loss_g_adv = sums.loss_g_adv * inv;
    return mean;
}

std::vector<EpochMetrics> run_epochs(TrainedModel& model,
                                     const std::vector<SampleContext>& samples,
                                     const TrainConfig& config, std::size_t first,
                                     std::size_t last) {
    if (first > last) throw ConfigError("run_epochs: first epoch beyond last");
    if (first != model.epochs_done)
        throw ConfigError("run_epochs: must continue from epochs_done");
    std::vector<EpochMetrics> history;
    history.reserve(last - first);
    for (std::size_t e = first; e < last; ++e) {
        history.push_back(train_epoch(model, samples, config, e));
        model.epochs_done = e + 1;
    }
    return history;
}

TrainResult train(const TrainConfig& config, const std::vector<SamplePair>& pairs) {
    if (pairs.empty())
        throw InsufficientSamples("train: no training samples");
    const ModelDims dims{pairs.front().lr.n, pairs.front().hr.n, config.k};
    TrainResult result;
    result.model = init_model(config, dims);
    const std::vector<SampleContext> contexts = prepare_samples(pairs, dims);
    result.history = run_epochs(result.model, contexts, config, 0, config.epochs);
    return result;
}

Matrix predict(const TrainedModel& model, const SampleContext& ctx) {
    Tape tape;
    return generator_forward(tape, model.gen, ctx).z_h->values;
}

namespace {

constexpr char kMagic[4] = {'A', 'G', 'S', 'R'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff),
                 static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

void put_f64(std::ostream& out, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

void put_array(std::ostream& out, const std::string& name, const Matrix& m) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (std::size_t i = 0; i < m.size(); ++i) put_f64(out, m.data()[i]);
}

Matrix row_vector(std::initializer_list<double> vals) {
    Matrix m(1, vals.size());
    std::size_t i = 0;
    for (double v : vals) m.data()[i++] = v;
    return m;
}

bool get_u32(std::istream& in, std::uint32_t& v, bool eof_ok) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() == 0 && eof_ok && in.eof()) return false;
    if (in.gcount() != 4) throw TruncatedFile("checkpoint: unexpected end of file");
    v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
        (static_cast<std::uint32_t>(b[2]) << 16) |
        (static_cast<std::uint32_t>(b[3]) << 24);
    return true;
}

double get_f64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (in.gcount() != 8) throw TruncatedFile("checkpoint: unexpected end of file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

const Matrix& find_array(const std::map<std::string, Matrix>& arrays,
                         const std::string& name) {
    auto it = arrays.find(name);
    if (it == arrays.end())
        throw IoError("checkpoint: missing array '" + name + "'");
    return it->second;
}

void write_adam(std::ostream& out, const char* tag, const AdamState& st,
                const NamedParams& params) {
    put_array(out, std::string("adam.t.") + tag,
              row_vector({static_cast<double>(st.t)}));
    put_array(out, std::string("adam.hyper.") + tag,
              row_vector({st.lr, st.beta1, st.beta2, st.eps}));
    for (std::size_t i = 0; i < params.size(); ++i) {
        put_array(out, "adam.m." + params[i].first, st.m[i]);
        put_array(out, "adam.v." + params[i].first, st.v[i]);
    }
}

AdamState read_adam(const std::map<std::string, Matrix>& arrays, const char* tag,
                    const NamedParams& params) {
    AdamState st;
    const Matrix& t = find_array(arrays, std::string("adam.t.") + tag);
    st.t = static_cast<std::uint64_t>(t(0, 0));
    const Matrix& hyper = find_array(arrays, std::string("adam.hyper.") + tag);
    if (hyper.size() != 4) throw IoError("checkpoint: malformed adam hyper array");
    st.lr = hyper.data()[0];
    st.beta1 = hyper.data()[1];
    st.beta2 = hyper.data()[2];
    st.eps = hyper.data()[3];
    for (const auto& [name, tensor] : params) {
        const Matrix& m = find_array(arrays, "adam.m." + name);
        const Matrix& v = find_array(arrays, "adam.v." + name);
        if (!m.same_shape(tensor->values) || !v.same_shape(tensor->values))
            throw IoError("checkpoint: adam state shape mismatch for " + name);
        st.m.push_back(m);
        st.v.push_back(v);
    }
    return st;
}

} // namespace

void save_checkpoint(const TrainedModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);

    const ModelDims& dims = model.gen.dims;
    put_array(out, "meta.dims",
              row_vector({static_cast<double>(dims.n), static_cast<double>(dims.n_h),
                          static_cast<double>(dims.k),
                          static_cast<double>(static_cast<int>(model.gen.variant))}));
    put_array(out, "meta.progress",
              row_vector({static_cast<double>(model.epochs_done)}));

    const NamedParams gen_params = named_params(model.gen);
    for (const auto& [name, t] : gen_params) put_array(out, name, t->values);
    write_adam(out, "gen", model.adam_g, gen_params);

    if (model.disc) {
        const NamedParams disc_params = named_params(*model.disc);
        for (const auto& [name, t] : disc_params) put_array(out, name, t->values);
        write_adam(out, "disc", model.adam_d, disc_params);
    }
    if (!out) throw IoError("write failed: " + path);
}

TrainedModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("no such file: " + path);

    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4) throw TruncatedFile("checkpoint: unexpected end of file");
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw BadMagic("checkpoint: bad magic bytes");
    std::uint32_t version = 0;
    get_u32(in, version, false);
    if (version != kVersion)
        throw VersionMismatch("checkpoint: unsupported version " +
                              std::to_string(version));

    std::map<std::string, Matrix> arrays;
    while (true) {
        std::uint32_t name_len = 0;
        if (!get_u32(in, name_len, true)) break;
        if (name_len == 0 || name_len > 4096)
            throw IoError("checkpoint: implausible array name length");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (in.gcount() != static_cast<std::streamsize>(name_len))
            throw TruncatedFile("checkpoint: unexpected end of file");
        std::uint32_t rows = 0, cols = 0;
        get_u32(in, rows, false);
        get_u32(in, cols, false);
        Matrix m(rows, cols);
        for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = get_f64(in);
        arrays.emplace(std::move(name), std::move(m));
    }

    const Matrix& dims_arr = find_array(arrays, "meta.dims");
    if (dims_arr.size() != 4) throw IoError("checkpoint: malformed meta.dims");
    ModelDims dims{static_cast<std::size_t>(dims_arr.data()[0]),
                   static_cast<std::size_t>(dims_arr.data()[1]),
                   static_cast<std::size_t>(dims_arr.data()[2])};
    const int vcode = static_cast<int>(dims_arr.data()[3]);
    if (vcode < 0 || vcode > static_cast<int>(Variant::agsr_net))
        throw IoError("checkpoint: unknown variant code");
    const auto variant = static_cast<Variant>(vcode);

    TrainedModel model;
    // Build the parameter structure, then overwrite every value from
    // the stored arrays.
    Rng scratch(0);
    model.gen = make_generator(variant, dims, scratch);
    const NamedParams gen_params = named_params(model.gen);
    for (const auto& [name, tensor] : gen_params) {
        const Matrix& stored = find_array(arrays, name);
        if (!stored.same_shape(tensor->values))
            throw IoError("checkpoint: shape mismatch for " + name);
        tensor->values = stored;
    }
    model.adam_g = read_adam(arrays, "gen", gen_params);

    if (arrays.count("disc.w1")) {
        DiscriminatorParams disc;
        disc.n_h = dims.n_h;
        disc.w1 = make_param(find_array(arrays, "disc.w1"));
        disc.b1 = make_param(find_array(arrays, "disc.b1"));
        disc.w2 = make_param(find_array(arrays, "disc.w2"));
        disc.b2 = make_param(find_array(arrays, "disc.b2"));
        disc.hidden = disc.w1->cols();
        if (disc.w1->rows() != dims.n_h * dims.n_h)
            throw IoError("checkpoint: discriminator input does not match dims");
        model.disc = std::move(disc);
        model.adam_d = read_adam(arrays, "disc", named_params(*model.disc));
    }

    const Matrix& progress = find_array(arrays, "meta.progress");
    model.epochs_done = static_cast<std::size_t>(progress(0, 0));
    return model;
}

void save_history_csv(const std::vector<EpochMetrics>& history,
                      const std::string& path, std::size_t first_epoch) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "epoch,loss_g,loss_hr,loss_eig,loss_rec,loss_d,loss_g_adv\n";
    for (std::size_t i = 0; i < history.size(); ++i) {
        const EpochMetrics& m = history[i];
        out << (first_epoch + i + 1) << ',' << format_double(m.loss_g) << ','
            << format_double(m.loss_hr) << ',' << format_double(m.loss_eig) << ','
            << format_double(m.loss_rec) << ',' << format_double(m.loss_d) << ','
            << format_double(m.loss_g_adv) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

} // namespace agsr
