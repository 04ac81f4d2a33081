#include "voxelnet/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "voxelnet/rng.hpp"
#include "voxelnet/serialize.hpp"

namespace voxelnet {

std::string_view label_name(int label) {
    switch (label) {
        case kLabelAD: return "AD";
        case kLabelMCI: return "MCI";
        case kLabelHC: return "HC";
        default: throw ParameterError("label_name: unknown label " + std::to_string(label));
    }
}

int parse_label(std::string_view name) {
    if (name == "AD") return kLabelAD;
    if (name == "MCI") return kLabelMCI;
    if (name == "HC") return kLabelHC;
    throw FormatError("parse_label: unknown label '" + std::string(name) + "'");
}

std::string_view split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    throw ParameterError("split_name: invalid split");
}

Split parse_split(std::string_view name) {
    if (name == "train") return Split::Train;
    if (name == "val") return Split::Val;
    if (name == "test") return Split::Test;
    throw FormatError("parse_split: unknown split '" + std::string(name) + "'");
}

namespace {

constexpr std::string_view kManifestHeader = "path,label,subject_id,split";

void check_field(const std::string& field) {
    if (field.find(',') != std::string::npos || field.find('\n') != std::string::npos)
        throw ParameterError("manifest field must not contain commas or newlines: '" +
                             field + "'");
}

}  // namespace

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    out << kManifestHeader << "\n";
    for (const auto& e : manifest.entries) {
        check_field(e.path);
        check_field(e.subject_id);
        out << e.path << ',' << label_name(e.label) << ',' << e.subject_id << ','
            << split_name(e.split) << "\n";
    }
    if (!out) throw FormatError("write failed: " + path.string());
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open for reading: " + path.string());

    std::string line;
    if (!std::getline(in, line) || line != kManifestHeader)
        throw FormatError(path.string() + ": manifest must start with header '" +
                          std::string(kManifestHeader) + "'");

    DatasetManifest manifest;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::array<std::string, 4> fields;
        std::size_t field = 0, start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                if (field >= fields.size())
                    throw FormatError(path.string() + ": too many fields on line " +
                                      std::to_string(lineno));
                fields[field++] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        if (field != fields.size())
            throw FormatError(path.string() + ": expected 4 fields on line " +
                              std::to_string(lineno));
        ManifestEntry e;
        e.path = fields[0];
        e.label = parse_label(fields[1]);
        e.subject_id = fields[2];
        e.split = parse_split(fields[3]);
        manifest.entries.push_back(std::move(e));
    }
    return manifest;
}

void save_volume(const Tensor3& volume, const std::filesystem::path& path) {
    if (volume.empty()) throw ParameterError("save_volume: empty volume");
    ByteWriter w(path);
    w.magic("VXV1");
    w.u32(static_cast<std::uint32_t>(volume.depth()));
    w.u32(static_cast<std::uint32_t>(volume.height()));
    w.u32(static_cast<std::uint32_t>(volume.width()));
    w.f32_array(volume.data());
    w.finish();
}

Tensor3 load_volume(const std::filesystem::path& path) {
    ByteReader r(path);
    r.expect_magic("VXV1");
    const std::size_t d = r.u32();
    const std::size_t h = r.u32();
    const std::size_t w = r.u32();
    if (d == 0 || h == 0 || w == 0)
        throw FormatError(path.string() + ": zero dimension in header");
    Tensor3 vol(d, h, w, r.f32_array(d * h * w));
    r.expect_eof();
    return vol;
}

Tensor3 normalize_volume(const Tensor3& volume) {
    if (volume.empty()) throw ParameterError("normalize_volume: empty volume");
    const double n = static_cast<double>(volume.size());
    double mean = 0.0;
    for (const double v : volume.data()) mean += v;
    mean /= n;
    double var = 0.0;
    for (const double v : volume.data()) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);
    if (sd <= 1e-12)
        throw ParameterError("normalize_volume: degenerate volume, standard deviation " +
                             std::to_string(sd));
    Tensor3 out(volume.depth(), volume.height(), volume.width());
    for (std::size_t i = 0; i < volume.size(); ++i)
        out.data()[i] = (volume.data()[i] - mean) / sd;
    return out;
}

std::vector<std::vector<double>> extract_patches_3d(
    std::span<const Tensor3> volumes, std::size_t per_scan,
    std::array<std::size_t, 3> size, std::uint64_t seed,
    std::vector<PatchOrigin>* origins) {
    const auto [a, b, c] = size;
    if (a == 0 || b == 0 || c == 0)
        throw ParameterError("extract_patches_3d: patch size must be positive");

    std::vector<std::vector<double>> patches;
    patches.reserve(volumes.size() * per_scan);
    if (origins) origins->clear();

    Rng rng(seed);
    for (std::size_t v = 0; v < volumes.size(); ++v) {
        const Tensor3& vol = volumes[v];
        if (vol.depth() < a || vol.height() < b || vol.width() < c)
            throw DimensionError("extract_patches_3d: patch does not fit volume " +
                                 std::to_string(v));
        for (std::size_t s = 0; s < per_scan; ++s) {
            const std::size_t i = rng.below(vol.depth() - a + 1);
            const std::size_t j = rng.below(vol.height() - b + 1);
            const std::size_t k = rng.below(vol.width() - c + 1);
            std::vector<double> patch;
            patch.reserve(a * b * c);
            for (std::size_t u = 0; u < a; ++u)
                for (std::size_t q = 0; q < b; ++q) {
                    const auto row = vol.row(i + u, j + q);
                    patch.insert(patch.end(), row.begin() + static_cast<std::ptrdiff_t>(k),
                                 row.begin() + static_cast<std::ptrdiff_t>(k + c));
                }
            patches.push_back(std::move(patch));
            if (origins) origins->push_back({v, i, j, k});
        }
    }
    return patches;
}

std::vector<std::vector<double>> extract_patches_2d(
    std::span<const Tensor3> volumes, std::size_t per_scan,
    std::array<std::size_t, 2> size, std::uint64_t seed,
    std::vector<PatchOrigin>* origins) {
    const auto [b, c] = size;
    if (b == 0 || c == 0)
        throw ParameterError("extract_patches_2d: patch size must be positive");

    std::vector<std::vector<double>> patches;
    patches.reserve(volumes.size() * per_scan);
    if (origins) origins->clear();

    Rng rng(seed);
    for (std::size_t v = 0; v < volumes.size(); ++v) {
        const Tensor3& vol = volumes[v];
        if (vol.height() < b || vol.width() < c)
            throw DimensionError("extract_patches_2d: patch does not fit slices of volume " +
                                 std::to_string(v));
        for (std::size_t s = 0; s < per_scan; ++s) {
            const std::size_t i = rng.below(vol.depth());
            const std::size_t j = rng.below(vol.height() - b + 1);
            const std::size_t k = rng.below(vol.width() - c + 1);
            std::vector<double> patch;
            patch.reserve(b * c);
            for (std::size_t q = 0; q < b; ++q) {
                const auto row = vol.row(i, j + q);
                patch.insert(patch.end(), row.begin() + static_cast<std::ptrdiff_t>(k),
                             row.begin() + static_cast<std::ptrdiff_t>(k + c));
            }
            patches.push_back(std::move(patch));
            if (origins) origins->push_back({v, i, j, k});
        }
    }
    return patches;
}

std::vector<Split> split_by_counts(std::size_t n, std::size_t n_train, std::size_t n_val,
                                   std::size_t n_test, std::uint64_t seed) {
    if (n_train + n_val + n_test != n)
        throw ParameterError("split_by_counts: counts sum to " +
                             std::to_string(n_train + n_val + n_test) + ", expected " +
                             std::to_string(n));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<Split> assignment(n, Split::Train);
    for (std::size_t i = 0; i < n; ++i) {
        const Split s = i < n_train            ? Split::Train
                        : i < n_train + n_val  ? Split::Val
                                               : Split::Test;
        assignment[order[i]] = s;
    }
    return assignment;
}

std::vector<Split> split_by_fractions(std::size_t n, double f_train, double f_val,
                                      double f_test, std::uint64_t seed) {
    if (f_train < 0.0 || f_val < 0.0 || f_test < 0.0 ||
        std::abs(f_train + f_val + f_test - 1.0) > 1e-9)
        throw ParameterError("split_by_fractions: fractions must be non-negative and sum to 1");
    const auto n_val = static_cast<std::size_t>(
        std::llround(f_val * static_cast<double>(n)));
    const auto n_test = static_cast<std::size_t>(
        std::llround(f_test * static_cast<double>(n)));
    if (n_val + n_test > n)
        throw ParameterError("split_by_fractions: rounding exceeded population");
    return split_by_counts(n, n - n_val - n_test, n_val, n_test, seed);
}

std::array<std::vector<Blob>, kNumClasses> default_class_blobs() {
    std::array<std::vector<Blob>, kNumClasses> blobs;
    // AD and HC share per-slice intensity profiles but differ in 3D
    // arrangement; MCI is a single central mass.
    blobs[kLabelAD] = {{0.30, 0.30, 0.50, 2.5, 1.0}, {0.70, 0.70, 0.50, 2.5, 0.8}};
    blobs[kLabelMCI] = {{0.50, 0.50, 0.50, 4.0, 0.9}};
    blobs[kLabelHC] = {{0.30, 0.70, 0.50, 2.5, 1.0}, {0.70, 0.30, 0.50, 2.5, 0.8}};
    return blobs;
}

std::vector<VolumeRecord> synth_generate(const SynthConfig& cfg) {
    const auto [dim_d, dim_h, dim_w] = cfg.shape;
    if (dim_d == 0 || dim_h == 0 || dim_w == 0)
        throw ParameterError("synth_generate: shape must be positive");

    auto blobs = cfg.class_blobs;
    if (std::all_of(blobs.begin(), blobs.end(),
                    [](const auto& v) { return v.empty(); }))
        blobs = default_class_blobs();

    // precompute blob centers in voxels and reject anything poking outside
    struct PlacedBlob {
        double cd, ch, cw, radius, intensity;
    };
    std::array<std::vector<PlacedBlob>, kNumClasses> placed;
    for (int label = 0; label < kNumClasses; ++label) {
        for (const Blob& blob : blobs[static_cast<std::size_t>(label)]) {
            if (!(blob.radius > 0.0))
                throw ParameterError("synth_generate: blob radius must be positive");
            const PlacedBlob p{blob.center_d * static_cast<double>(dim_d - 1),
                               blob.center_h * static_cast<double>(dim_h - 1),
                               blob.center_w * static_cast<double>(dim_w - 1),
                               blob.radius, blob.intensity};
            const double lim_d = static_cast<double>(dim_d - 1);
            const double lim_h = static_cast<double>(dim_h - 1);
            const double lim_w = static_cast<double>(dim_w - 1);
            if (p.cd - p.radius < 0.0 || p.cd + p.radius > lim_d ||
                p.ch - p.radius < 0.0 || p.ch + p.radius > lim_h ||
                p.cw - p.radius < 0.0 || p.cw + p.radius > lim_w)
                throw ParameterError("synth_generate: blob does not fit inside the volume");
            placed[static_cast<std::size_t>(label)].push_back(p);
        }
    }

    std::vector<VolumeRecord> records;
    records.reserve(kNumClasses * cfg.count_per_class);
    for (int label = 0; label < kNumClasses; ++label) {
        std::string prefix(label_name(label));
        std::transform(prefix.begin(), prefix.end(), prefix.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        for (std::size_t idx = 0; idx < cfg.count_per_class; ++idx) {
            const std::uint64_t volume_key =
                static_cast<std::uint64_t>(label) * cfg.count_per_class + idx;
            Rng rng(derive_seed(cfg.seed, "synth-volume", volume_key));

            Tensor3 vol(dim_d, dim_h, dim_w);
            for (std::size_t i = 0; i < dim_d; ++i)
                for (std::size_t j = 0; j < dim_h; ++j) {
                    double* row = vol.row(i, j).data();
                    for (std::size_t k = 0; k < dim_w; ++k) {
                        double v = 0.0;
                        for (const PlacedBlob& p : placed[static_cast<std::size_t>(label)]) {
                            const double dd = static_cast<double>(i) - p.cd;
                            const double dh = static_cast<double>(j) - p.ch;
                            const double dw = static_cast<double>(k) - p.cw;
                            const double dist2 = dd * dd + dh * dh + dw * dw;
                            v += p.intensity *
                                 std::exp(-dist2 / (2.0 * p.radius * p.radius));
                        }
                        row[k] = v;
                    }
                }
            if (cfg.noise_sd > 0.0)
                for (auto& v : vol.data()) v += cfg.noise_sd * rng.normal();

            char id[32];
            std::snprintf(id, sizeof(id), "%s-%03zu", prefix.c_str(), idx);
            records.push_back({std::move(vol), label, id});
        }
    }
    return records;
}

void save_patches(std::span<const std::vector<double>> patches,
                  const std::filesystem::path& path) {
    const std::size_t len = patches.empty() ? 0 : patches.front().size();
    for (const auto& p : patches)
        if (p.size() != len)
            throw DimensionError("save_patches: patches must share one length");
    ByteWriter w(path);
    w.magic("VXPC");
    w.u32(static_cast<std::uint32_t>(len));
    w.u64(patches.size());
    for (const auto& p : patches) w.f32_array(p);
    w.finish();
}

std::vector<std::vector<double>> load_patches(const std::filesystem::path& path) {
    ByteReader r(path);
    r.expect_magic("VXPC");
    const std::size_t len = r.u32();
    const std::uint64_t count = r.u64();
    std::vector<std::vector<double>> patches;
    patches.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) patches.push_back(r.f32_array(len));
    r.expect_eof();
    return patches;
}

}  // namespace voxelnet
