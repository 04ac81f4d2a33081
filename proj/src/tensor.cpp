#include "voxelnet/tensor.hpp"

namespace voxelnet {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: inner dimensions disagree");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* crow = c.row(i).data();
        for (std::size_t l = 0; l < a.cols(); ++l) {
            const double av = a(i, l);
            const double* brow = b.row(l).data();
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw DimensionError("matmul_at: inner dimensions disagree");
    Matrix c(a.cols(), b.cols());
    for (std::size_t l = 0; l < a.rows(); ++l) {
        const double* arow = a.row(l).data();
        const double* brow = b.row(l).data();
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double av = arow[i];
            double* crow = c.row(i).data();
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw DimensionError("matmul_bt: inner dimensions disagree");
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i).data();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* brow = b.row(j).data();
            double acc = 0.0;
            for (std::size_t l = 0; l < a.cols(); ++l) acc += arow[l] * brow[l];
            c(i, j) = acc;
        }
    }
    return c;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size())
        throw DimensionError("matvec: vector length does not match columns");
    std::vector<double> y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i).data();
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) acc += arow[j] * x[j];
        y[i] = acc;
    }
    return y;
}

std::vector<double> matvec_t(const Matrix& a, std::span<const double> x) {
    if (a.rows() != x.size())
        throw DimensionError("matvec_t: vector length does not match rows");
    std::vector<double> y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i).data();
        const double xv = x[i];
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += xv * arow[j];
    }
    return y;
}

}  // namespace voxelnet
