#include "agsr/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "agsr/errors.hpp"
#include "agsr/rng.hpp"
#include "agsr/textio.hpp"

namespace fs = std::filesystem;

namespace agsr {

namespace {

std::uint64_t parse_u64(std::string_view s, const char* what) {
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw IoError(std::string("manifest: bad ") + what + " value '" +
                      std::string(s) + "'");
    return v;
}

std::string split_name(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::none: return "none";
    }
    throw ConfigError("split_name: unknown split");
}

Split split_from_name(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    if (s == "none") return Split::none;
    throw IoError("manifest: unknown split '" + std::string(s) + "'");
}

std::string resolve(const std::string& base_dir, const std::string& rel) {
    fs::path p(rel);
    if (p.is_absolute() || base_dir.empty()) return p.string();
    return (fs::path(base_dir) / p).string();
}

/// Repair tiny numerical asymmetry / diagonal residue, reject anything
/// beyond 1e-9.
WeightedGraph graph_from_matrix(Matrix m, const std::string& what) {
    if (m.rows() != m.cols())
        throw MalformedMatrix(what + ": graph matrix must be square, got " +
                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    const std::size_t n = m.rows();
    double worst_asym = 0.0, worst_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        worst_diag = std::max(worst_diag, std::fabs(m(i, i)));
        for (std::size_t j = i + 1; j < n; ++j)
            worst_asym = std::max(worst_asym, std::fabs(m(i, j) - m(j, i)));
    }
    if (worst_asym > 1e-9)
        throw AsymmetricGraph(what + ": asymmetry " + format_double(worst_asym) +
                              " exceeds 1e-9");
    if (worst_diag > 1e-9)
        throw InvalidGraph(what + ": nonzero diagonal " + format_double(worst_diag) +
                           " exceeds 1e-9");
    if (worst_asym > 0.0 || worst_diag > 0.0) {
        std::cerr << "warning: " << what << ": repaired asymmetry "
                  << format_double(worst_asym) << ", diagonal "
                  << format_double(worst_diag) << "\n";
        for (std::size_t i = 0; i < n; ++i) {
            m(i, i) = 0.0;
            for (std::size_t j = i + 1; j < n; ++j) {
                const double v = 0.5 * (m(i, j) + m(j, i));
                m(i, j) = v;
                m(j, i) = v;
            }
        }
    }
    return WeightedGraph(std::move(m));
}

} // namespace

void save_matrix_csv(const Matrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

Matrix load_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile("no such file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() && in.eof()) break;
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string_view tok =
                std::string_view(line).substr(start, comma == std::string::npos
                                                         ? std::string::npos
                                                         : comma - start);
            row.push_back(parse_double(tok));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw MalformedMatrix(path + ": ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw MalformedMatrix(path + ": empty matrix file");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

DatasetManifest generate_synthetic_dataset(std::uint64_t seed, std::size_t n_samples,
                                           std::size_t n, std::size_t n_h,
                                           std::size_t k, const std::string& out_dir) {
    if (n_samples < 2)
        throw DatasetTooSmall("need at least 2 samples, got " +
                              std::to_string(n_samples));
    if (n < 2 || n_h < 2) throw ConfigError("graph sizes must be at least 2");

    const fs::path samples_dir = fs::path(out_dir) / "samples";
    std::error_code ec;
    fs::create_directories(samples_dir, ec);
    if (ec) throw IoError("cannot create " + samples_dir.string() + ": " + ec.message());

    Rng rng(seed);

    // Hidden lifting map shared by every sample of the dataset.
    Matrix lift(n_h, n);
    for (std::size_t i = 0; i < lift.size(); ++i) lift.data()[i] = rng.gaussian();

    DatasetManifest manifest;
    manifest.n = n;
    manifest.n_h = n_h;
    manifest.k = k;
    manifest.seed = seed;
    manifest.base_dir = out_dir;

    for (std::size_t s = 0; s < n_samples; ++s) {
        Matrix a_l(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double w = rng.uniform(-1.0, 1.0);
                a_l(i, j) = w;
                a_l(j, i) = w;
            }

        Matrix a_h = symmetrize(matmul(matmul(lift, a_l), transpose(lift)));
        double peak = max_abs(a_h);
        if (peak == 0.0) peak = 1.0;
        a_h = scale(a_h, 1.0 / peak);
        for (std::size_t i = 0; i < n_h; ++i) {
            a_h(i, i) = 0.0;
            for (std::size_t j = i + 1; j < n_h; ++j) {
                double noise = 0.01 * rng.gaussian();
                if (noise > 0.03) noise = 0.03;
                if (noise < -0.03) noise = -0.03;
                a_h(i, j) += noise;
                a_h(j, i) = a_h(i, j);
            }
        }

        char id[32];
        std::snprintf(id, sizeof(id), "s%03zu", s);
        const std::string lr_rel = "samples/" + std::string(id) + "_lr.mat.csv";
        const std::string hr_rel = "samples/" + std::string(id) + "_hr.mat.csv";
        save_matrix_csv(a_l, resolve(out_dir, lr_rel));
        save_matrix_csv(a_h, resolve(out_dir, hr_rel));
        manifest.entries.push_back({id, lr_rel, hr_rel, Split::none});
    }
    return manifest;
}

void split_dataset(DatasetManifest& manifest, double train_fraction,
                   std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train fraction must be in (0, 1)");
    const std::size_t m = manifest.entries.size();
    if (m < 2) throw DatasetTooSmall("cannot split fewer than 2 samples");
    const auto n_train =
        static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(m)));
    if (n_train == 0 || n_train == m)
        throw DatasetTooSmall("split would leave an empty train or test set");

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(seed, 1));
    rng.shuffle(order);
    for (std::size_t i = 0; i < m; ++i)
        manifest.entries[order[i]].split = i < n_train ? Split::train : Split::test;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "agsr-manifest " << manifest.version << '\n';
    out << "n " << manifest.n << '\n';
    out << "n_h " << manifest.n_h << '\n';
    out << "k " << manifest.k << '\n';
    out << "seed " << manifest.seed << '\n';
    for (const ManifestEntry& e : manifest.entries)
        out << e.id << ',' << e.lr_path << ',' << e.hr_path << ','
            << split_name(e.split) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile("no such file: " + path);

    DatasetManifest manifest;
    manifest.base_dir = fs::path(path).parent_path().string();

    std::string line;
    if (!std::getline(in, line) || line.rfind("agsr-manifest ", 0) != 0)
        throw IoError(path + ": not a dataset manifest");
    manifest.version = static_cast<std::uint32_t>(
        parse_u64(std::string_view(line).substr(14), "version"));
    if (manifest.version != 1)
        throw VersionMismatch(path + ": unsupported manifest version " +
                              std::to_string(manifest.version));

    auto header = [&](const char* key) {
        if (!std::getline(in, line))
            throw IoError(path + ": truncated manifest header");
        const std::string prefix = std::string(key) + " ";
        if (line.rfind(prefix, 0) != 0)
            throw IoError(path + ": expected '" + key + "' header line");
        return parse_u64(std::string_view(line).substr(prefix.size()), key);
    };
    manifest.n = header("n");
    manifest.n_h = header("n_h");
    manifest.k = header("k");
    manifest.seed = header("seed");

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(
                start, comma == std::string::npos ? std::string::npos : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 4)
            throw IoError(path + ": malformed sample line '" + line + "'");
        manifest.entries.push_back(
            {fields[0], fields[1], fields[2], split_from_name(fields[3])});
    }
    return manifest;
}

std::vector<SamplePair> load_dataset(const DatasetManifest& manifest, Split filter) {
    std::vector<SamplePair> out;
    for (const ManifestEntry& e : manifest.entries) {
        if (filter != Split::none && e.split != filter) continue;
        Matrix lr = load_matrix_csv(resolve(manifest.base_dir, e.lr_path));
        Matrix hr = load_matrix_csv(resolve(manifest.base_dir, e.hr_path));
        if (lr.rows() != manifest.n)
            throw MalformedMatrix("sample " + e.id + ": LR matrix is " +
                                  std::to_string(lr.rows()) + "x" +
                                  std::to_string(lr.cols()) + ", manifest says n=" +
                                  std::to_string(manifest.n));
        if (hr.rows() != manifest.n_h)
            throw MalformedMatrix("sample " + e.id + ": HR matrix is " +
                                  std::to_string(hr.rows()) + "x" +
                                  std::to_string(hr.cols()) + ", manifest says n_h=" +
                                  std::to_string(manifest.n_h));
        SamplePair pair;
        pair.id = e.id;
        pair.lr = graph_from_matrix(std::move(lr), "sample " + e.id + " (LR)");
        pair.hr = graph_from_matrix(std::move(hr), "sample " + e.id + " (HR)");
        out.push_back(std::move(pair));
    }
    return out;
}

} // namespace agsr
