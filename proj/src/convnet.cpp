#include "voxelnet/convnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "voxelnet/ops.hpp"
#include "voxelnet/parallel.hpp"
#include "voxelnet/serialize.hpp"

namespace voxelnet {

namespace {

void check_scan_shape(const Tensor3& scan, const std::array<std::size_t, 3>& want) {
    const std::array<std::size_t, 3> have{scan.depth(), scan.height(), scan.width()};
    static const char* axis[] = {"depth", "height", "width"};
    for (std::size_t d = 0; d < 3; ++d)
        if (have[d] != want[d])
            throw DimensionError("featurize: scan " + std::string(axis[d]) + " is " +
                                 std::to_string(have[d]) + ", bank expects " +
                                 std::to_string(want[d]));
}

}  // namespace

ConvFeatureBank make_bank_3d(std::vector<std::pair<Tensor3, double>> bases,
                             std::array<std::size_t, 3> pool,
                             std::array<std::size_t, 3> input_shape) {
    if (bases.empty()) throw ParameterError("make_bank_3d: no filters");
    ConvFeatureBank bank;
    bank.mode = ConvMode::ThreeD;
    bank.pool3 = pool;
    bank.input_shape = input_shape;
    bank.filters3.reserve(bases.size());
    bank.biases.reserve(bases.size());
    for (auto& [filter, bias] : bases) {
        if (!bank.filters3.empty() && !filter.same_shape(bank.filters3.front()))
            throw DimensionError("make_bank_3d: filters must share one shape");
        bank.filters3.push_back(std::move(filter));
        bank.biases.push_back(bias);
    }
    feature_length(bank);  // validates shapes up front
    return bank;
}

ConvFeatureBank make_bank_2d(std::vector<std::pair<Matrix, double>> bases,
                             std::array<std::size_t, 2> pool,
                             std::array<std::size_t, 3> input_shape) {
    if (bases.empty()) throw ParameterError("make_bank_2d: no filters");
    ConvFeatureBank bank;
    bank.mode = ConvMode::TwoD;
    bank.pool2 = pool;
    bank.input_shape = input_shape;
    bank.filters2.reserve(bases.size());
    bank.biases.reserve(bases.size());
    for (auto& [filter, bias] : bases) {
        if (!bank.filters2.empty() && !filter.same_shape(bank.filters2.front()))
            throw DimensionError("make_bank_2d: filters must share one shape");
        bank.filters2.push_back(std::move(filter));
        bank.biases.push_back(bias);
    }
    feature_length(bank);
    return bank;
}

Tensor3 feature_map(const Tensor3& x, const Tensor3& w, double bias) {
    Tensor3 fm = convolve3d_valid(x, w);
    for (auto& v : fm.data()) v = sigmoid(v + bias);
    return fm;
}

Matrix feature_map2d(const Matrix& x, const Matrix& w, double bias) {
    Matrix fm = convolve2d_valid(x, w);
    for (auto& v : fm.data()) v = sigmoid(v + bias);
    return fm;
}

std::array<std::size_t, 3> pooled_shape_3d(const ConvFeatureBank& bank) {
    const Tensor3& f = bank.filters3.front();
    const auto& in = bank.input_shape;
    if (f.depth() > in[0] || f.height() > in[1] || f.width() > in[2])
        throw DimensionError("bank: filter exceeds expected input shape");
    const std::array<std::size_t, 3> conv{in[0] - f.depth() + 1, in[1] - f.height() + 1,
                                          in[2] - f.width() + 1};
    const std::array<std::size_t, 3> pooled{conv[0] / bank.pool3[0],
                                            conv[1] / bank.pool3[1],
                                            conv[2] / bank.pool3[2]};
    if (pooled[0] == 0 || pooled[1] == 0 || pooled[2] == 0)
        throw DimensionError("bank: pooling window exceeds feature map");
    return pooled;
}

std::array<std::size_t, 2> pooled_shape_2d(const ConvFeatureBank& bank) {
    const Matrix& f = bank.filters2.front();
    const auto& in = bank.input_shape;
    if (f.rows() > in[1] || f.cols() > in[2])
        throw DimensionError("bank: filter exceeds expected slice shape");
    const std::array<std::size_t, 2> conv{in[1] - f.rows() + 1, in[2] - f.cols() + 1};
    const std::array<std::size_t, 2> pooled{conv[0] / bank.pool2[0], conv[1] / bank.pool2[1]};
    if (pooled[0] == 0 || pooled[1] == 0)
        throw DimensionError("bank: pooling window exceeds feature map");
    return pooled;
}

std::size_t feature_length(const ConvFeatureBank& bank) {
    if (bank.mode == ConvMode::ThreeD) {
        const auto p = pooled_shape_3d(bank);
        return bank.filter_count() * p[0] * p[1] * p[2];
    }
    const auto p = pooled_shape_2d(bank);
    return bank.filter_count() * bank.input_shape[0] * p[0] * p[1];
}

Matrix depth_slice(const Tensor3& scan, std::size_t index) {
    if (index >= scan.depth())
        throw ParameterError("depth_slice: slice index " + std::to_string(index) +
                             " out of range");
    const auto first = scan.data().begin() +
                       static_cast<std::ptrdiff_t>(scan.offset(index, 0, 0));
    return Matrix(scan.height(), scan.width(),
                  {first, first + static_cast<std::ptrdiff_t>(scan.height() * scan.width())});
}

std::vector<double> featurize3d(const Tensor3& scan, const ConvFeatureBank& bank,
                                unsigned threads) {
    if (bank.mode != ConvMode::ThreeD)
        throw ParameterError("featurize3d: bank is not in 3D mode");
    check_scan_shape(scan, bank.input_shape);

    const auto pooled = pooled_shape_3d(bank);
    const std::size_t block = pooled[0] * pooled[1] * pooled[2];
    std::vector<double> out(bank.filter_count() * block);

    parallel_for(bank.filter_count(), threads, [&](std::size_t f) {
        const Tensor3 fm = feature_map(scan, bank.filters3[f], bank.biases[f]);
        const Tensor3 pm = maxpool3d(fm, bank.pool3[0], bank.pool3[1], bank.pool3[2]);
        std::copy(pm.data().begin(), pm.data().end(),
                  out.begin() + static_cast<std::ptrdiff_t>(f * block));
    });
    return out;
}

std::vector<double> featurize2d(const Tensor3& scan, const ConvFeatureBank& bank,
                                unsigned threads) {
    if (bank.mode != ConvMode::TwoD)
        throw ParameterError("featurize2d: bank is not in 2D mode");
    check_scan_shape(scan, bank.input_shape);

    const auto pooled = pooled_shape_2d(bank);
    const std::size_t slice_block = pooled[0] * pooled[1];
    const std::size_t filter_block = scan.depth() * slice_block;
    std::vector<double> out(bank.filter_count() * filter_block);

    // slices are materialized once and shared read-only across filters
    std::vector<Matrix> slices;
    slices.reserve(scan.depth());
    for (std::size_t z = 0; z < scan.depth(); ++z) slices.push_back(depth_slice(scan, z));

    parallel_for(bank.filter_count(), threads, [&](std::size_t f) {
        double* base = out.data() + f * filter_block;
        for (std::size_t z = 0; z < scan.depth(); ++z) {
            const Matrix fm = feature_map2d(slices[z], bank.filters2[f], bank.biases[f]);
            const Matrix pm = maxpool2d(fm, bank.pool2[0], bank.pool2[1]);
            std::copy(pm.data().begin(), pm.data().end(), base + z * slice_block);
        }
    });
    return out;
}

void export_feature_slice(const Tensor3& scan, const ConvFeatureBank& bank,
                          std::size_t filter_index, std::size_t slice_index,
                          const std::filesystem::path& path) {
    if (filter_index >= bank.filter_count())
        throw ParameterError("export_feature_slice: filter index " +
                             std::to_string(filter_index) + " out of range");

    Matrix img;
    if (bank.mode == ConvMode::ThreeD) {
        check_scan_shape(scan, bank.input_shape);
        const Tensor3 fm = feature_map(scan, bank.filters3[filter_index],
                                       bank.biases[filter_index]);
        if (slice_index >= fm.depth())
            throw ParameterError("export_feature_slice: slice index " +
                                 std::to_string(slice_index) + " out of range");
        img = depth_slice(fm, slice_index);
    } else {
        check_scan_shape(scan, bank.input_shape);
        if (slice_index >= scan.depth())
            throw ParameterError("export_feature_slice: slice index " +
                                 std::to_string(slice_index) + " out of range");
        img = feature_map2d(depth_slice(scan, slice_index), bank.filters2[filter_index],
                            bank.biases[filter_index]);
    }

    const auto [lo_it, hi_it] = std::minmax_element(img.data().begin(), img.data().end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<std::vector<unsigned char>> pixels(img.rows(),
                                                   std::vector<unsigned char>(img.cols()));
    for (std::size_t i = 0; i < img.rows(); ++i)
        for (std::size_t j = 0; j < img.cols(); ++j)
            pixels[i][j] = hi > lo
                               ? static_cast<unsigned char>(
                                     std::lround((img(i, j) - lo) / (hi - lo) * 255.0))
                               : static_cast<unsigned char>(128);
    write_pgm(pixels, path);
}

void save_features(std::span<const double> values, const std::filesystem::path& path) {
    ByteWriter w(path);
    w.magic("VXFV");
    w.u32(1);
    w.u64(values.size());
    w.f32_array(values);
    w.finish();
}

std::vector<double> load_features(const std::filesystem::path& path) {
    ByteReader r(path);
    r.expect_magic("VXFV");
    const std::uint32_t version = r.u32();
    if (version != 1)
        throw FormatError(path.string() + ": unsupported VXFV version " +
                          std::to_string(version));
    const std::uint64_t length = r.u64();
    std::vector<double> values = r.f32_array(length);
    r.expect_eof();
    return values;
}

void write_pgm(const std::vector<std::vector<unsigned char>>& pixels,
               const std::filesystem::path& path) {
    if (pixels.empty() || pixels.front().empty())
        throw ParameterError("write_pgm: empty image");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    out << "P5\n" << pixels.front().size() << " " << pixels.size() << "\n255\n";
    for (const auto& row : pixels) {
        if (row.size() != pixels.front().size())
            throw ParameterError("write_pgm: ragged rows");
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw FormatError("write failed: " + path.string());
}

}  // namespace voxelnet
