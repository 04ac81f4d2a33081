#pragma once

#include <array>
#include <filesystem>
#include <utility>
#include <vector>

#include "voxelnet/autoencoder.hpp"
#include "voxelnet/tensor.hpp"

namespace voxelnet {

enum class ConvMode { ThreeD, TwoD };

// Frozen convolution + pooling feature extractor built from autoencoder
// bases. In 3D mode every filter convolves the whole volume; in 2D mode every
// filter convolves each slice along the depth axis. There is no gradient path
// into the bank.
struct ConvFeatureBank {
    ConvMode mode = ConvMode::ThreeD;
    std::vector<Tensor3> filters3;            // ThreeD only
    std::vector<Matrix> filters2;             // TwoD only
    std::vector<double> biases;
    std::array<std::size_t, 3> pool3{5, 5, 5};
    std::array<std::size_t, 2> pool2{10, 10};
    std::array<std::size_t, 3> input_shape{68, 95, 79};  // (depth, height, width)

    std::size_t filter_count() const { return biases.size(); }
};

ConvFeatureBank make_bank_3d(std::vector<std::pair<Tensor3, double>> bases,
                             std::array<std::size_t, 3> pool,
                             std::array<std::size_t, 3> input_shape);

ConvFeatureBank make_bank_2d(std::vector<std::pair<Matrix, double>> bases,
                             std::array<std::size_t, 2> pool,
                             std::array<std::size_t, 3> input_shape);

// sigmoid(convolve_valid(x, w) + b), the bias added to every entry.
Tensor3 feature_map(const Tensor3& x, const Tensor3& w, double bias);
Matrix feature_map2d(const Matrix& x, const Matrix& w, double bias);

// Shape of one pooled feature map for the bank's configuration.
std::array<std::size_t, 3> pooled_shape_3d(const ConvFeatureBank& bank);
std::array<std::size_t, 2> pooled_shape_2d(const ConvFeatureBank& bank);

// Stacked feature vector length for one scan.
std::size_t feature_length(const ConvFeatureBank& bank);

// One depth slice of a volume as a height*width matrix.
Matrix depth_slice(const Tensor3& scan, std::size_t index);

// 3D pipeline: per filter, feature_map -> maxpool3d -> canonical flatten,
// blocks concatenated in filter order. Filters may be processed in parallel;
// the output does not depend on the thread count.
std::vector<double> featurize3d(const Tensor3& scan, const ConvFeatureBank& bank,
                                unsigned threads = 1);

// 2D pipeline: every depth slice convolved with every filter, pooled, then
// stacked filter-major, slice next, canonical 2D order innermost.
std::vector<double> featurize2d(const Tensor3& scan, const ConvFeatureBank& bank,
                                unsigned threads = 1);

// Writes one slice of one (pre-pooling) feature map as an 8-bit min-max
// scaled grayscale PGM (P5). A constant slice maps to mid-gray.
void export_feature_slice(const Tensor3& scan, const ConvFeatureBank& bank,
                          std::size_t filter_index, std::size_t slice_index,
                          const std::filesystem::path& path);

// VXFV cache: magic "VXFV", version u32, length u64, little-endian f32
// values. Values round-trip exactly at single precision.
void save_features(std::span<const double> values, const std::filesystem::path& path);
std::vector<double> load_features(const std::filesystem::path& path);

// P5 grayscale image IO used by export_feature_slice.
void write_pgm(const std::vector<std::vector<unsigned char>>& pixels,
               const std::filesystem::path& path);

}  // namespace voxelnet
