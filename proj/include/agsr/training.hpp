#ifndef AGSR_TRAINING_HPP
#define AGSR_TRAINING_HPP

#include <optional>
#include <string>
#include <vector>

#include "agsr/data.hpp"
#include "agsr/model.hpp"

namespace agsr {

struct TrainConfig {
    Variant variant = Variant::agsr_net;
    std::size_t epochs = 200;
    double lr = 1e-4;
    double lambda = 0.1; // weight of the self-reconstruction term
    std::size_t k = 2;
    std::uint64_t seed = 42;
    std::size_t disc_hidden = 256;
};

/// Adam with bias correction. Moment buffers are kept in parameter
/// order; `t` counts completed steps. A non-finite gradient or update
/// aborts the whole step (NumericalError) without touching any
/// parameter or moment.
struct AdamState {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t t = 0;
    std::vector<Matrix> m;
    std::vector<Matrix> v;
};

AdamState make_adam(const std::vector<std::pair<std::string, TensorPtr>>& params,
                    double lr);
void adam_step(AdamState& state,
               const std::vector<std::pair<std::string, TensorPtr>>& params);

/// Mean losses over one epoch. loss_g is the generator objective
/// without the adversarial term (which has its own column); components
/// a variant does not compute stay zero.
struct EpochMetrics {
    double loss_g = 0.0;
    double loss_hr = 0.0;
    double loss_eig = 0.0;
    double loss_rec = 0.0;
    double loss_d = 0.0;
    double loss_g_adv = 0.0;
};

struct TrainedModel {
    GeneratorParams gen;
    std::optional<DiscriminatorParams> disc;
    AdamState adam_g;
    AdamState adam_d; // meaningful only when disc is present
    std::size_t epochs_done = 0;
};

/// Fresh parameters and optimizer state for (config, dims); a single
/// seeded stream initializes generator then discriminator.
TrainedModel init_model(const TrainConfig& config, ModelDims dims);

/// Spectral bases and normalized adjacencies, computed once per sample.
std::vector<SampleContext> prepare_samples(const std::vector<SamplePair>& pairs,
                                           const ModelDims& dims);

/// One pass over the training set in a seed-derived order (the order
/// depends only on config.seed and epoch_index, which is what makes
/// checkpoint resume bit-exact). Per sample, adversarial variants first
/// update the discriminator on the real target versus a detached fake,
/// then the generator on a fresh forward pass; the two updates never
/// touch each other's parameters.
EpochMetrics train_epoch(TrainedModel& model, const std::vector<SampleContext>& samples,
                         const TrainConfig& config, std::size_t epoch_index);

/// Epochs [first, last); appends nothing to model history, just returns
/// the per-epoch metrics and advances model.epochs_done.
std::vector<EpochMetrics> run_epochs(TrainedModel& model,
                                     const std::vector<SampleContext>& samples,
                                     const TrainConfig& config, std::size_t first,
                                     std::size_t last);

struct TrainResult {
    TrainedModel model;
    std::vector<EpochMetrics> history;
};

/// Full training run: dims are derived from the first sample and
/// config.k.
TrainResult train(const TrainConfig& config, const std::vector<SamplePair>& pairs);

/// Forward pass with frozen parameters; returns the predicted HR
/// adjacency values.
Matrix predict(const TrainedModel& model, const SampleContext& ctx);

/// Binary checkpoint: "AGSR" magic, u32 version, then named f64 arrays
/// (name length, name, rows, cols, row-major payload), all little
/// endian. Contains dims/variant metadata, parameters and full Adam
/// state, so training resumes bit-exactly under the same config.
void save_checkpoint(const TrainedModel& model, const std::string& path);
TrainedModel load_checkpoint(const std::string& path);

/// CSV with one row per epoch: epoch, loss_g, loss_hr, loss_eig,
/// loss_rec, loss_d, loss_g_adv. Epoch numbers are 1-based;
/// first_epoch offsets them when the history continues a resumed run.
void save_history_csv(const std::vector<EpochMetrics>& history,
                      const std::string& path, std::size_t first_epoch = 0);

} // namespace agsr

#endif // AGSR_TRAINING_HPP
