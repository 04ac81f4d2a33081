#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voxelnet/tensor.hpp"

namespace voxelnet {

// Class labels of the three-way task.
inline constexpr int kLabelAD = 0;
inline constexpr int kLabelMCI = 1;
inline constexpr int kLabelHC = 2;
inline constexpr int kNumClasses = 3;

std::string_view label_name(int label);       // "AD" / "MCI" / "HC"
int parse_label(std::string_view name);

enum class Split { Train, Val, Test };

std::string_view split_name(Split s);         // "train" / "val" / "test"
Split parse_split(std::string_view name);

struct ManifestEntry {
    std::string path;  // relative to the manifest's directory
    int label = 0;
    std::string subject_id;
    Split split = Split::Train;
};

// Labeled volume references with their split assignment. Stored as UTF-8 CSV
// with header "path,label,subject_id,split"; fields must not contain commas.
struct DatasetManifest {
    std::vector<ManifestEntry> entries;
};

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

// VXV1 volume file: magic "VXV1", then depth/height/width as u32 and voxels
// as f32, all little-endian, canonical order. In-memory math is double; the
// file rounds to single precision, so save/load of a loaded volume is the
// identity.
void save_volume(const Tensor3& volume, const std::filesystem::path& path);
Tensor3 load_volume(const std::filesystem::path& path);

// Zero mean, unit population standard deviation. Rejects (near-)constant
// volumes instead of emitting zeros.
Tensor3 normalize_volume(const Tensor3& volume);

// Where a sampled patch came from; i is the slice index for 2D patches.
struct PatchOrigin {
    std::size_t volume = 0;
    std::size_t i = 0, j = 0, k = 0;
};

// per_scan patches per volume at uniformly random valid corners, each
// unrolled canonically. The (seed, volumes, per_scan) triple fully determines
// the result.
std::vector<std::vector<double>> extract_patches_3d(
    std::span<const Tensor3> volumes, std::size_t per_scan,
    std::array<std::size_t, 3> size, std::uint64_t seed,
    std::vector<PatchOrigin>* origins = nullptr);

// 2D analogue sampling (slice, row, col) corners on the depth axis.
std::vector<std::vector<double>> extract_patches_2d(
    std::span<const Tensor3> volumes, std::size_t per_scan,
    std::array<std::size_t, 2> size, std::uint64_t seed,
    std::vector<PatchOrigin>* origins = nullptr);

// Deterministic shuffle, then the first n_train indices become Train, the
// next n_val become Val, the rest Test. Counts must sum to n.
std::vector<Split> split_by_counts(std::size_t n, std::size_t n_train, std::size_t n_val,
                                   std::size_t n_test, std::uint64_t seed);

// Fractions must be non-negative and sum to 1; val and test counts round to
// nearest, train takes the remainder.
std::vector<Split> split_by_fractions(std::size_t n, double f_train, double f_val,
                                      double f_test, std::uint64_t seed);

// One smooth Gaussian bump; the center is given as fractions of the volume
// shape, the radius in voxels.
struct Blob {
    double center_d = 0.5, center_h = 0.5, center_w = 0.5;
    double radius = 3.0;
    double intensity = 1.0;
};

// Desk-scale synthetic stand-in for a real scan corpus: each class is a
// distinct additive blob pattern plus seeded Gaussian noise, separable by
// construction at low noise.
struct SynthConfig {
    std::array<std::size_t, 3> shape{20, 24, 20};
    std::array<std::vector<Blob>, kNumClasses> class_blobs;  // empty -> defaults
    double noise_sd = 0.4;
    std::size_t count_per_class = 100;
    std::uint64_t seed = 0;
};

struct VolumeRecord {
    Tensor3 volume;
    int label = 0;
    std::string subject_id;
};

// The built-in per-class blob patterns used when SynthConfig::class_blobs is
// left empty.
std::array<std::vector<Blob>, kNumClasses> default_class_blobs();

std::vector<VolumeRecord> synth_generate(const SynthConfig& cfg);

// VXPC patch cache: magic "VXPC", patch length u32, count u64, f32 values.
void save_patches(std::span<const std::vector<double>> patches,
                  const std::filesystem::path& path);
std::vector<std::vector<double>> load_patches(const std::filesystem::path& path);

}  // namespace voxelnet
