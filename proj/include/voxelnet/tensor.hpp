#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "voxelnet/error.hpp"

namespace voxelnet {

// Dense 3D array of doubles in canonical order: depth is the slowest-varying
// index, width the fastest. All file formats and stacking orders in the
// toolkit reference this flattening.
class Tensor3 {
public:
    Tensor3() = default;

    Tensor3(std::size_t depth, std::size_t height, std::size_t width)
        : depth_(depth), height_(height), width_(width) {
        check_dims();
        data_.assign(depth_ * height_ * width_, 0.0);
    }

    Tensor3(std::size_t depth, std::size_t height, std::size_t width,
            std::vector<double> values)
        : depth_(depth), height_(height), width_(width), data_(std::move(values)) {
        check_dims();
        if (data_.size() != depth_ * height_ * width_)
            throw DimensionError("Tensor3: data length does not match shape");
    }

    std::size_t depth() const { return depth_; }
    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    // Canonical flat offset of (i,j,k).
    std::size_t offset(std::size_t i, std::size_t j, std::size_t k) const {
        return (i * height_ + j) * width_ + k;
    }

    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data_[offset(i, j, k)];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[offset(i, j, k)];
    }

    // Contiguous run along the width axis at (i,j).
    std::span<double> row(std::size_t i, std::size_t j) {
        return {data_.data() + offset(i, j, 0), width_};
    }
    std::span<const double> row(std::size_t i, std::size_t j) const {
        return {data_.data() + offset(i, j, 0), width_};
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Tensor3& o) const {
        return depth_ == o.depth_ && height_ == o.height_ && width_ == o.width_;
    }

private:
    void check_dims() const {
        if (depth_ == 0 || height_ == 0 || width_ == 0)
            throw DimensionError("Tensor3: dimensions must be positive");
    }

    std::size_t depth_ = 0, height_ = 0, width_ = 0;
    std::vector<double> data_;
};

// Dense row-major matrix of doubles. Doubles as the 2D array type for slices
// and 2D filters.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
        check_dims();
        data_.assign(rows_ * cols_, 0.0);
    }

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), data_(std::move(values)) {
        check_dims();
        if (data_.size() != rows_ * cols_)
            throw DimensionError("Matrix: data length does not match shape");
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    void check_dims() const {
        if (rows_ == 0 || cols_ == 0)
            throw DimensionError("Matrix: dimensions must be positive");
    }

    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

// C = A * B, A is m*k, B is k*n.
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A^T * B, A is k*m, B is k*n.
Matrix matmul_at(const Matrix& a, const Matrix& b);
// C = A * B^T, A is m*k, B is n*k.
Matrix matmul_bt(const Matrix& a, const Matrix& b);

// y = A x  (A is m*n, x has length n).
std::vector<double> matvec(const Matrix& a, std::span<const double> x);
// y = A^T x  (A is m*n, x has length m).
std::vector<double> matvec_t(const Matrix& a, std::span<const double> x);

}  // namespace voxelnet
