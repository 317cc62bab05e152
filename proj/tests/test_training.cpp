#include <cstdio>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "agsr/errors.hpp"
#include "agsr/training.hpp"

using namespace agsr;
namespace fs = std::filesystem;

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

std::vector<SamplePair> tiny_pairs(std::uint64_t seed, std::size_t count,
                                   std::size_t n = 6, std::size_t n_h = 10) {
    Rng rng(seed);
    std::vector<SamplePair> out;
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(
            {"p" + std::to_string(i), random_graph(rng, n), random_graph(rng, n_h)});
    return out;
}

TrainConfig tiny_config(Variant v, std::size_t epochs) {
    TrainConfig c;
    c.variant = v;
    c.epochs = epochs;
    c.lr = 1e-3;
    c.disc_hidden = 16;
    return c;
}

fs::path temp_file(const char* name) {
    const fs::path dir = fs::temp_directory_path() / "agsr_training_tests";
    fs::create_directories(dir);
    return dir / name;
}

bool params_equal(const TrainedModel& a, const TrainedModel& b) {
    const auto pa = named_params(a.gen);
    const auto pb = named_params(b.gen);
    if (pa.size() != pb.size()) return false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        if (pa[i].first != pb[i].first) return false;
        if (!bitwise_equal(pa[i].second->values, pb[i].second->values)) return false;
    }
    if (a.disc.has_value() != b.disc.has_value()) return false;
    if (a.disc) {
        const auto da = named_params(*a.disc);
        const auto db = named_params(*b.disc);
        for (std::size_t i = 0; i < da.size(); ++i)
            if (!bitwise_equal(da[i].second->values, db[i].second->values))
                return false;
    }
    return true;
}

bool metrics_equal(const EpochMetrics& a, const EpochMetrics& b) {
    return a.loss_g == b.loss_g && a.loss_hr == b.loss_hr &&
           a.loss_eig == b.loss_eig && a.loss_rec == b.loss_rec &&
           a.loss_d == b.loss_d && a.loss_g_adv == b.loss_g_adv;
}

} // namespace

TEST_CASE("adam reproduces a hand-computed two-step trajectory") {
    TensorPtr p = make_param(Matrix(1, 1, 1.0));
    std::vector<std::pair<std::string, TensorPtr>> params{{"w", p}};
    AdamState state = make_adam(params, 0.1);

    p->grad = Matrix(1, 1, 0.5);
    adam_step(state, params);
    // first step: mhat = g, vhat = g^2, so x -= lr * g / (|g| + eps)
    const double x1 = 1.0 - 0.1 * 0.5 / (0.5 + 1e-8);
    CHECK(p->values(0, 0) == doctest::Approx(x1).epsilon(1e-15));
    CHECK(state.t == 1);

    p->grad = Matrix(1, 1, -0.25);
    adam_step(state, params);
    const double m2 = 0.9 * (0.1 * 0.5) + 0.1 * (-0.25);
    const double v2 = 0.999 * (0.001 * 0.25) + 0.001 * 0.0625;
    const double mhat = m2 / (1.0 - 0.9 * 0.9);
    const double vhat = v2 / (1.0 - 0.999 * 0.999);
    const double x2 = x1 - 0.1 * mhat / (std::sqrt(vhat) + 1e-8);
    CHECK(p->values(0, 0) == doctest::Approx(x2).epsilon(1e-15));
    CHECK(state.t == 2);
}

TEST_CASE("adam treats a missing gradient as zero") {
    TensorPtr p = make_param(Matrix(2, 2, 3.0));
    std::vector<std::pair<std::string, TensorPtr>> params{{"w", p}};
    AdamState state = make_adam(params, 0.1);
    adam_step(state, params); // grad never touched
    CHECK(p->values(0, 0) == 3.0);
    CHECK(state.t == 1);
}

TEST_CASE("adam aborts the whole step on a non-finite gradient") {
    TensorPtr a = make_param(Matrix(1, 1, 1.0));
    TensorPtr b = make_param(Matrix(1, 1, 2.0));
    std::vector<std::pair<std::string, TensorPtr>> params{{"a", a}, {"b", b}};
    AdamState state = make_adam(params, 0.1);
    a->grad = Matrix(1, 1, 0.5);
    b->grad = Matrix(1, 1, std::numeric_limits<double>::quiet_NaN());
    CHECK_THROWS_AS(adam_step(state, params), NumericalError);
    CHECK(a->values(0, 0) == 1.0); // untouched despite its own healthy grad
    CHECK(b->values(0, 0) == 2.0);
    CHECK(state.t == 0);
}

TEST_CASE("spectral factors are computed once per sample") {
    const auto pairs = tiny_pairs(1, 3);
    const std::uint64_t before = eigendecompose_call_count();
    const auto samples = prepare_samples(pairs, ModelDims{6, 10, 2});
    CHECK(eigendecompose_call_count() == before + 2 * pairs.size());
    CHECK(samples.size() == 3);
}

TEST_CASE("training is bitwise deterministic in the seed") {
    const auto pairs = tiny_pairs(2, 3);
    const TrainConfig config = tiny_config(Variant::agsr_net, 2);
    const TrainResult a = train(config, pairs);
    const TrainResult b = train(config, pairs);
    REQUIRE(a.history.size() == 2);
    CHECK(params_equal(a.model, b.model));
    for (std::size_t i = 0; i < 2; ++i)
        CHECK(metrics_equal(a.history[i], b.history[i]));
}

TEST_CASE("adversarial columns stay zero for plain variants") {
    const auto pairs = tiny_pairs(3, 2);
    const TrainResult r = train(tiny_config(Variant::gsr_net, 1), pairs);
    CHECK_FALSE(r.model.disc.has_value());
    CHECK(r.history[0].loss_d == 0.0);
    CHECK(r.history[0].loss_g_adv == 0.0);
    CHECK(r.history[0].loss_hr > 0.0);

    const TrainResult adv = train(tiny_config(Variant::agsr_net, 1), pairs);
    CHECK(adv.model.disc.has_value());
    CHECK(adv.history[0].loss_d > 0.0);
    CHECK(adv.history[0].loss_g_adv > 0.0);
}

TEST_CASE("training demands samples and a consistent upsampling factor") {
    CHECK_THROWS_AS(train(tiny_config(Variant::gsr_net, 1), {}), InsufficientSamples);
    TrainConfig c = tiny_config(Variant::gsr_net, 1);
    c.k = 3;
    CHECK_THROWS_AS(init_model(c, ModelDims{6, 10, 2}), ConfigError);
}

TEST_CASE("epoch windows must continue where the model stopped") {
    const auto pairs = tiny_pairs(4, 2);
    const TrainConfig config = tiny_config(Variant::gsr_net, 4);
    TrainedModel model = init_model(config, ModelDims{6, 10, 2});
    const auto samples = prepare_samples(pairs, model.gen.dims);
    run_epochs(model, samples, config, 0, 2);
    CHECK(model.epochs_done == 2);
    CHECK_THROWS_AS(run_epochs(model, samples, config, 0, 4), ConfigError);
    CHECK_THROWS_AS(run_epochs(model, samples, config, 3, 4), ConfigError);
    run_epochs(model, samples, config, 2, 4);
    CHECK(model.epochs_done == 4);
}

TEST_CASE("prediction is a frozen symmetric forward pass") {
    const auto pairs = tiny_pairs(5, 2);
    const TrainResult r = train(tiny_config(Variant::agsr_net, 1), pairs);
    const auto samples = prepare_samples(pairs, r.model.gen.dims);
    const Matrix p1 = predict(r.model, samples[0]);
    const Matrix p2 = predict(r.model, samples[0]);
    CHECK(bitwise_equal(p1, p2));
    CHECK(p1.rows() == 10);
    CHECK(max_abs_diff(p1, transpose(p1)) == 0.0);
}

TEST_CASE("checkpoints survive a save load save round trip byte for byte") {
    const auto pairs = tiny_pairs(6, 2);
    const TrainResult r = train(tiny_config(Variant::agsr_net, 2), pairs);
    const fs::path p1 = temp_file("round1.agsr");
    const fs::path p2 = temp_file("round2.agsr");
    save_checkpoint(r.model, p1.string());
    const TrainedModel loaded = load_checkpoint(p1.string());
    CHECK(params_equal(r.model, loaded));
    CHECK(loaded.epochs_done == 2);
    CHECK(loaded.adam_g.t == r.model.adam_g.t);
    CHECK(loaded.adam_g.lr == r.model.adam_g.lr);
    save_checkpoint(loaded, p2.string());

    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)),
                         std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)),
                         std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
    CHECK_FALSE(b1.empty());
}

TEST_CASE("checkpoint loader rejects damaged files") {
    CHECK_THROWS_AS(load_checkpoint(temp_file("nowhere.agsr").string()), MissingFile);

    const fs::path bad_magic = temp_file("bad_magic.agsr");
    std::ofstream(bad_magic, std::ios::binary) << "NOPE" << std::string(16, '\0');
    CHECK_THROWS_AS(load_checkpoint(bad_magic.string()), BadMagic);

    const fs::path bad_version = temp_file("bad_version.agsr");
    {
        std::ofstream out(bad_version, std::ios::binary);
        out << "AGSR";
        const std::uint32_t v = 99;
        out.write(reinterpret_cast<const char*>(&v), 4);
    }
    CHECK_THROWS_AS(load_checkpoint(bad_version.string()), VersionMismatch);

    const auto pairs = tiny_pairs(7, 2);
    const TrainResult r = train(tiny_config(Variant::gsr_net, 1), pairs);
    const fs::path whole = temp_file("whole.agsr");
    save_checkpoint(r.model, whole.string());
    const fs::path cut = temp_file("cut.agsr");
    {
        std::ifstream in(whole, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        std::ofstream out(cut, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS_AS(load_checkpoint(cut.string()), TruncatedFile);
}

TEST_CASE("resuming from a checkpoint replays the exact trajectory") {
    const auto pairs = tiny_pairs(8, 3);
    const TrainConfig config = tiny_config(Variant::agsr_net, 5);
    const ModelDims dims{6, 10, 2};
    const auto samples = prepare_samples(pairs, dims);

    TrainedModel straight = init_model(config, dims);
    const auto hist_a = run_epochs(straight, samples, config, 0, 5);

    TrainedModel first_leg = init_model(config, dims);
    auto hist_b = run_epochs(first_leg, samples, config, 0, 2);
    const fs::path ckpt = temp_file("resume.agsr");
    save_checkpoint(first_leg, ckpt.string());
    TrainedModel second_leg = load_checkpoint(ckpt.string());
    const auto tail = run_epochs(second_leg, samples, config, 2, 5);
    hist_b.insert(hist_b.end(), tail.begin(), tail.end());

    REQUIRE(hist_a.size() == hist_b.size());
    for (std::size_t i = 0; i < hist_a.size(); ++i) {
        CAPTURE(i);
        CHECK(metrics_equal(hist_a[i], hist_b[i]));
    }
    CHECK(params_equal(straight, second_leg));
}

TEST_CASE("history csv is written with offset epoch numbers") {
    std::vector<EpochMetrics> history(2);
    history[0].loss_g = 1.5;
    history[1].loss_g = 1.25;
    const fs::path p = temp_file("history.csv");
    save_history_csv(history, p.string(), 10);
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,loss_g,loss_hr,loss_eig,loss_rec,loss_d,loss_g_adv");
    std::getline(in, line);
    CHECK(line.substr(0, 7) == "11,1.5,");
    std::getline(in, line);
    CHECK(line.substr(0, 8) == "12,1.25,");
}
