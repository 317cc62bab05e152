#ifndef AGSR_COMMANDS_HPP
#define AGSR_COMMANDS_HPP

#include <cstdint>
#include <string>

namespace agsr {

/// Implementations behind the CLI subcommands. Flag parsing and exit
/// codes live in the tool; these functions do the work and throw
/// agsr errors on failure.

struct GenDataArgs {
    std::string out_dir;
    std::uint64_t seed = 42;
    std::size_t samples = 100;
    std::size_t n = 20;
    std::size_t n_h = 34;
    std::size_t k = 2;
    double train_fraction = 0.7;
};
void cmd_gen_data(const GenDataArgs& args);

struct TrainArgs {
    std::string manifest;
    std::string out_dir;
    std::string variant = "agsr-net";
    std::size_t epochs = 200;
    double lr = 1e-4;
    double lambda = 0.1;
    std::size_t k = 2;
    std::uint64_t seed = 42;
    std::string resume; // optional checkpoint to continue from
};
void cmd_train(const TrainArgs& args);

struct EvalArgs {
    std::string checkpoint;
    std::string manifest;
    std::string report_dir;
    bool residuals = false;
};
void cmd_eval(const EvalArgs& args);

struct AblateArgs {
    std::string manifest;
    std::string report_dir;
    std::size_t epochs = 200;
    double lr = 1e-4;
    double lambda = 0.1;
    std::size_t k = 2;
    std::uint64_t seed = 42;
};
void cmd_ablate(const AblateArgs& args);

} // namespace agsr

#endif // AGSR_COMMANDS_HPP
