#include <iostream>

#include <CLI11.hpp>

#include "agsr/commands.hpp"
#include "agsr/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"adversarial graph super-resolution of brain connectomes"};
    app.require_subcommand(1);

    agsr::GenDataArgs gen;
    CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic dataset");
    gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();
    gen_cmd->add_option("--seed", gen.seed, "rng seed")->capture_default_str();
    gen_cmd->add_option("--samples", gen.samples, "number of LR/HR pairs")
        ->capture_default_str();
    gen_cmd->add_option("--lr-nodes", gen.n, "LR graph size")->capture_default_str();
    gen_cmd->add_option("--hr-nodes", gen.n_h, "HR graph size")->capture_default_str();
    gen_cmd->add_option("--k", gen.k, "upsampling factor recorded in the manifest")
        ->capture_default_str();
    gen_cmd->add_option("--train-fraction", gen.train_fraction, "train split fraction")
        ->capture_default_str();

    agsr::TrainArgs train;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model");
    train_cmd->add_option("--data", train.manifest, "dataset manifest")->required();
    train_cmd->add_option("--out", train.out_dir, "output directory")->required();
    train_cmd
        ->add_option("--variant", train.variant, "architecture to train")
        ->check(CLI::IsMember(
            {"gsr-layer", "deep-gsr", "gsr-ae", "gsr-net", "agsr-net"}))
        ->capture_default_str();
    train_cmd->add_option("--epochs", train.epochs, "training epochs")
        ->capture_default_str();
    train_cmd->add_option("--lr", train.lr, "learning rate")->capture_default_str();
    train_cmd->add_option("--lambda", train.lambda, "self-reconstruction weight")
        ->capture_default_str();
    train_cmd->add_option("--k", train.k, "upsampling factor")->capture_default_str();
    train_cmd->add_option("--seed", train.seed, "rng seed")->capture_default_str();
    train_cmd->add_option("--resume", train.resume,
                          "checkpoint to continue training from");

    agsr::EvalArgs eval;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->add_option("--model", eval.checkpoint, "checkpoint file")->required();
    eval_cmd->add_option("--data", eval.manifest, "dataset manifest")->required();
    eval_cmd->add_option("--report", eval.report_dir, "report output directory")
        ->required();
    eval_cmd->add_flag("--residuals", eval.residuals,
                       "also write per-sample residual matrices");

    agsr::AblateArgs ablate;
    CLI::App* ablate_cmd =
        app.add_subcommand("ablate", "train and compare all architectures");
    ablate_cmd->add_option("--data", ablate.manifest, "dataset manifest")->required();
    ablate_cmd->add_option("--report", ablate.report_dir, "report output directory")
        ->required();
    ablate_cmd->add_option("--epochs", ablate.epochs, "training epochs per variant")
        ->capture_default_str();
    ablate_cmd->add_option("--lr", ablate.lr, "learning rate")->capture_default_str();
    ablate_cmd->add_option("--lambda", ablate.lambda, "self-reconstruction weight")
        ->capture_default_str();
    ablate_cmd->add_option("--k", ablate.k, "upsampling factor")->capture_default_str();
    ablate_cmd->add_option("--seed", ablate.seed, "rng seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*gen_cmd) agsr::cmd_gen_data(gen);
        if (*train_cmd) agsr::cmd_train(train);
        if (*eval_cmd) agsr::cmd_eval(eval);
        if (*ablate_cmd) agsr::cmd_ablate(ablate);
        return 0;
    } catch (const agsr::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
