#include "agsr/commands.hpp"

#include <filesystem>
#include <iostream>

#include "agsr/errors.hpp"
#include "agsr/eval.hpp"
#include "agsr/textio.hpp"
#include "agsr/training.hpp"

namespace fs = std::filesystem;

namespace agsr {

namespace {

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
}

std::vector<SampleMetrics> evaluate_model(const TrainedModel& model,
                                          const std::vector<SampleContext>& contexts,
                                          const std::string& residual_dir) {
    std::vector<SampleMetrics> metrics;
    metrics.reserve(contexts.size());
    for (const SampleContext& ctx : contexts) {
        const Matrix pred = predict(model, ctx);
        metrics.push_back(compute_sample_metrics(ctx.id, pred, ctx.hr.adj));
        if (!residual_dir.empty()) {
            const ResidualResult res = residual_matrix(pred, ctx.hr.adj);
            save_matrix_csv(res.abs_diff,
                            (fs::path(residual_dir) / (ctx.id + "_residual.mat.csv"))
                                .string());
        }
    }
    return metrics;
}

void print_aggregate(const MethodReport& report) {
    const SampleMetrics& a = report.aggregate;
    std::cout << report.method << ": mse=" << format_double(a.mse)
              << " mae=" << format_double(a.mae)
              << " strength_mae=" << format_double(a.strength_mae)
              << " strength_kl=" << format_double(a.strength_kl) << " ("
              << report.samples.size() << " test samples)\n";
}

} // namespace

void cmd_gen_data(const GenDataArgs& args) {
    DatasetManifest manifest = generate_synthetic_dataset(
        args.seed, args.samples, args.n, args.n_h, args.k, args.out_dir);
    split_dataset(manifest, args.train_fraction, args.seed);
    const std::string path = (fs::path(args.out_dir) / "manifest.txt").string();
    save_manifest(manifest, path);

    std::size_t n_train = 0;
    for (const ManifestEntry& e : manifest.entries)
        if (e.split == Split::train) ++n_train;
    std::cout << "wrote " << manifest.entries.size() << " samples (" << n_train
              << " train, " << manifest.entries.size() - n_train << " test) to "
              << path << "\n";
}

void cmd_train(const TrainArgs& args) {
    const DatasetManifest manifest = load_manifest(args.manifest);
    const std::vector<SamplePair> pairs = load_dataset(manifest, Split::train);
    if (pairs.empty())
        throw InsufficientSamples("manifest has no samples marked train");

    TrainConfig config;
    config.variant = variant_from_name(args.variant);
    config.epochs = args.epochs;
    config.lr = args.lr;
    config.lambda = args.lambda;
    config.k = args.k;
    config.seed = args.seed;

    TrainedModel model;
    std::vector<EpochMetrics> history;
    std::size_t first_epoch = 0;
    if (args.resume.empty()) {
        TrainResult result = train(config, pairs);
        model = std::move(result.model);
        history = std::move(result.history);
    } else {
        model = load_checkpoint(args.resume);
        if (model.gen.variant != config.variant)
            throw ConfigError("resume checkpoint was trained as variant '" +
                              std::string(variant_name(model.gen.variant)) + "'");
        if (model.gen.dims.n != manifest.n || model.gen.dims.n_h != manifest.n_h)
            throw ConfigError("resume checkpoint dims do not match manifest");
        if (model.gen.dims.k != config.k)
            throw ConfigError("resume checkpoint was trained with k=" +
                              std::to_string(model.gen.dims.k));
        model.adam_g.lr = config.lr;
        if (model.disc) model.adam_d.lr = config.lr;
        first_epoch = model.epochs_done;
        const std::vector<SampleContext> contexts =
            prepare_samples(pairs, model.gen.dims);
        history = run_epochs(model, contexts, config, first_epoch, args.epochs);
    }

    ensure_dir(args.out_dir);
    save_checkpoint(model, (fs::path(args.out_dir) / "model.agsr").string());
    save_history_csv(history, (fs::path(args.out_dir) / "history.csv").string(),
                     first_epoch);

    std::cout << "trained " << args.variant << " for " << model.epochs_done
              << " epoch(s)";
    if (!history.empty()) {
        const EpochMetrics& last = history.back();
        std::cout << "; final loss_g=" << format_double(last.loss_g)
                  << " loss_hr=" << format_double(last.loss_hr);
        if (model.disc) std::cout << " loss_d=" << format_double(last.loss_d);
    }
    std::cout << "\n";
}

void cmd_eval(const EvalArgs& args) {
    const TrainedModel model = load_checkpoint(args.checkpoint);
    const DatasetManifest manifest = load_manifest(args.manifest);
    if (model.gen.dims.n != manifest.n || model.gen.dims.n_h != manifest.n_h)
        throw ConfigError(
            "checkpoint expects N=" + std::to_string(model.gen.dims.n) + "/N_h=" +
            std::to_string(model.gen.dims.n_h) + " but manifest has N=" +
            std::to_string(manifest.n) + "/N_h=" + std::to_string(manifest.n_h));
    if (model.gen.dims.k != manifest.k)
        throw ConfigError("checkpoint was trained with k=" +
                          std::to_string(model.gen.dims.k) + " but manifest says k=" +
                          std::to_string(manifest.k));

    const std::vector<SamplePair> pairs = load_dataset(manifest, Split::test);
    if (pairs.empty())
        throw InsufficientSamples("manifest has no samples marked test");
    const std::vector<SampleContext> contexts = prepare_samples(pairs, model.gen.dims);

    std::string residual_dir;
    if (args.residuals) {
        residual_dir = (fs::path(args.report_dir) / "residuals").string();
        ensure_dir(residual_dir);
    }

    EvaluationReport report;
    report.methods.push_back(
        make_method_report(variant_name(model.gen.variant),
                           evaluate_model(model, contexts, residual_dir)));
    emit_report(report, args.report_dir);
    print_aggregate(report.methods.front());
}

void cmd_ablate(const AblateArgs& args) {
    const DatasetManifest manifest = load_manifest(args.manifest);
    const std::vector<SamplePair> train_pairs = load_dataset(manifest, Split::train);
    const std::vector<SamplePair> test_pairs = load_dataset(manifest, Split::test);
    if (train_pairs.empty() || test_pairs.empty())
        throw InsufficientSamples("ablation needs both train and test samples");

    EvaluationReport report;
    for (Variant variant : all_variants()) {
        TrainConfig config;
        config.variant = variant;
        config.epochs = args.epochs;
        config.lr = args.lr;
        config.lambda = args.lambda;
        config.k = args.k;
        config.seed = args.seed;

        TrainResult result = train(config, train_pairs);
        const std::vector<SampleContext> contexts =
            prepare_samples(test_pairs, result.model.gen.dims);
        report.methods.push_back(make_method_report(
            variant_name(variant), evaluate_model(result.model, contexts, "")));
        print_aggregate(report.methods.back());
    }
    report.significance = compare_methods(report.methods);
    emit_report(report, args.report_dir);
    std::cout << "wrote ablation report (" << report.significance.size()
              << " significance rows) to " << args.report_dir << "\n";
}

} // namespace agsr
