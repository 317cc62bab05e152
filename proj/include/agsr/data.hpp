#ifndef AGSR_DATA_HPP
#define AGSR_DATA_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "agsr/graph.hpp"

namespace agsr {

/// One LR/HR connectome pair.
struct SamplePair {
    std::string id;
    WeightedGraph lr;
    WeightedGraph hr;
};

enum class Split { none, train, test };

struct ManifestEntry {
    std::string id;
    std::string lr_path; // relative to the manifest directory
    std::string hr_path;
    Split split = Split::none;
};

/// Index of a dataset on disk: generation parameters plus one entry per
/// sample. Serialized as a small line-oriented text file.
struct DatasetManifest {
    std::uint32_t version = 1;
    std::size_t n = 0;
    std::size_t n_h = 0;
    std::size_t k = 2;
    std::uint64_t seed = 0;
    std::vector<ManifestEntry> entries;
    std::string base_dir; // set when loaded/generated, not serialized
};

/// Matrix text format: one row per line, comma separated, every value
/// printed in shortest round-trip form. save-then-load is bit exact.
void save_matrix_csv(const Matrix& m, const std::string& path);
Matrix load_matrix_csv(const std::string& path);

/// Draw n_samples LR/HR pairs from a fixed synthetic generative
/// process: a hidden Gaussian lifting matrix M maps each random
/// symmetric LR graph to sym(M A M^T), which is scaled to unit peak
/// magnitude and perturbed with small symmetric noise (std 0.01,
/// clamped at three sigma), diagonal zeroed. The same seed always
/// produces the same files. Matrices are written under
/// out_dir/samples/; the returned manifest is not yet saved.
DatasetManifest generate_synthetic_dataset(std::uint64_t seed, std::size_t n_samples,
                                           std::size_t n, std::size_t n_h,
                                           std::size_t k, const std::string& out_dir);

/// Assign train/test splits in place: floor(fraction * count) samples
/// become train after a seeded shuffle, the rest test.
void split_dataset(DatasetManifest& manifest, double train_fraction,
                   std::uint64_t seed);

void save_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

/// Load the sample pairs named by a manifest, optionally only one
/// split. Each matrix is validated as a weighted graph; asymmetry up to
/// 1e-9 (and equally tiny diagonal residue) is repaired with a warning
/// on stderr, anything larger is rejected.
std::vector<SamplePair> load_dataset(const DatasetManifest& manifest,
                                     Split filter = Split::none);

} // namespace agsr

#endif // AGSR_DATA_HPP
