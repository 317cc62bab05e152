#ifndef AGSR_MODEL_HPP
#define AGSR_MODEL_HPP

#include <string>
#include <utility>
#include <vector>

#include "agsr/layers.hpp"
#include "agsr/rng.hpp"

namespace agsr {

/// Architectures trained by the CLI. The first three are reduced
/// baselines, gsr_net is the full generator, agsr_net adds the
/// adversarial game on top.
enum class Variant { gsr_layer, deep_gsr, gsr_autoencoder, gsr_net, agsr_net };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name); // ConfigError on unknown
bool variant_adversarial(Variant v);
const std::vector<Variant>& all_variants();

struct ModelDims {
    std::size_t n = 0;   // LR nodes
    std::size_t n_h = 0; // HR nodes
    std::size_t k = 0;   // upsampling factor
    std::size_t nk() const { return n * k; }
};

/// Generator parameters. Components a variant does not use stay null.
/// The full pipeline is: initial GCN embedding (gcn0), a two-level
/// graph U-autoencoder (enc*/dec*), the super-resolution layer (gsr)
/// and two refining GCNs on the predicted HR graph (post1/post2).
struct GeneratorParams {
    Variant variant = Variant::agsr_net;
    ModelDims dims;
    GcnLayer gcn0;
    PoolLayer enc1_pool;
    GcnLayer enc1_gcn;
    PoolLayer enc2_pool;
    GcnLayer enc2_gcn;
    GcnLayer dec1_gcn;
    GcnLayer dec2_gcn;
    GsrLayer gsr;
    GcnLayer post1;
    GcnLayer post2;
};

/// Two dense layers and a sigmoid, judging whether an HR adjacency
/// looks real. Operates on the flattened matrix.
struct DiscriminatorParams {
    std::size_t n_h = 0;
    std::size_t hidden = 0;
    TensorPtr w1, b1, w2, b2;
};

/// Weights drawn uniform in +-sqrt(1/fan_in), biases zero, consumed
/// from rng in a fixed component order so initialization is
/// reproducible per (variant, dims, seed).
GeneratorParams make_generator(Variant variant, ModelDims dims, Rng& rng);
DiscriminatorParams make_discriminator(std::size_t n_h, Rng& rng,
                                       std::size_t hidden = 256);

/// Present parameters in a fixed canonical order with their
/// serialization names (gcn0.w, enc1.u, enc1.w, ..., disc.w1, ...).
std::vector<std::pair<std::string, TensorPtr>> named_params(const GeneratorParams& p);
std::vector<std::pair<std::string, TensorPtr>> named_params(const DiscriminatorParams& p);

/// Everything derived from one LR/HR pair that stays constant during
/// training: the normalized LR adjacency, the LR spectral basis u0, the
/// spectral target u1 of the padded HR Laplacian and the selection
/// matrix. Spectral factors are computed here exactly once per sample.
struct SampleContext {
    std::string id;
    WeightedGraph lr;
    WeightedGraph hr;
    Matrix a_l_norm;
    EigenDecomposition u0;
    Matrix u1;
    Matrix s_d;
};

SampleContext make_sample_context(std::string id, WeightedGraph lr, WeightedGraph hr,
                                  const ModelDims& dims);

struct GeneratorOutput {
    TensorPtr z0;         // initial embedding (null if the variant has none)
    TensorPtr z_l;        // embedding entering the super-resolution layer
    TensorPtr a_h_tilde;  // predicted HR adjacency, padded size
    TensorPtr x_h_tilde;  // HR features from self-similarity
    TensorPtr z_h_padded; // prediction before unpadding
    TensorPtr z_h;        // final symmetric prediction, n_h x n_h
    std::vector<double> pool_margins;
};

/// Full generator pipeline (the gsr_net / agsr_net architecture).
GeneratorOutput srg_forward(Tape& tape, const GeneratorParams& params,
                            const WeightedGraph& a_l, const EigenDecomposition& u0);

/// Variant dispatch used by training and evaluation.
GeneratorOutput generator_forward(Tape& tape, const GeneratorParams& params,
                                  const SampleContext& ctx);

TensorPtr discriminator_forward(Tape& tape, const DiscriminatorParams& d,
                                const TensorPtr& m);

/// Self-reconstruction: mean squared row distance between the initial
/// embedding and the autoencoder output.
TensorPtr loss_rec(Tape& tape, const TensorPtr& z0, const TensorPtr& z_l);
/// Spectral alignment of the SR weights with the target eigenbasis.
TensorPtr loss_eig(Tape& tape, const GeneratorParams& params, const Matrix& u1);
/// Mean squared row distance between prediction and HR target.
TensorPtr loss_hr(Tape& tape, const TensorPtr& z_h, const Matrix& a_h);
/// Full generator objective: hr + eig + lambda * rec.
TensorPtr loss_g(Tape& tape, const GeneratorParams& params, const GeneratorOutput& out,
                 const SampleContext& ctx, double lambda);
/// Variant-aware objective (reduced variants drop terms they lack).
TensorPtr generator_loss(Tape& tape, const GeneratorParams& params,
                         const GeneratorOutput& out, const SampleContext& ctx,
                         double lambda);
/// Same objective with the individual terms exposed; terms a variant
/// does not compute stay null.
struct GeneratorObjective {
    TensorPtr total;
    TensorPtr hr;
    TensorPtr eig;
    TensorPtr rec;
};
GeneratorObjective generator_objective(Tape& tape, const GeneratorParams& params,
                                       const GeneratorOutput& out,
                                       const SampleContext& ctx, double lambda);
/// Discriminator objective: -log d_real / 2 - log(1 - d_fake) / 2.
TensorPtr loss_d(Tape& tape, const TensorPtr& d_real, const TensorPtr& d_fake);
/// Non-saturating generator fooling term: -log d_fake.
TensorPtr loss_g_adv(Tape& tape, const TensorPtr& d_fake);

} // namespace agsr

#endif // AGSR_MODEL_HPP
