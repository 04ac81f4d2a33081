#include "voxelnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace voxelnet {

double sigmoid(double z) {
    double r;
    if (z >= 0.0) {
        r = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        r = e / (1.0 + e);
    }
    // keep the open interval (0,1) even under saturation
    constexpr double lo = std::numeric_limits<double>::min();
    constexpr double hi = 1.0 - 0x1.0p-53;
    return std::clamp(r, lo, hi);
}

void sigmoid_inplace(std::span<double> v) {
    for (auto& z : v) z = sigmoid(z);
}

std::vector<double> sigmoid(std::vector<double> v) {
    sigmoid_inplace(v);
    return v;
}

namespace {

void check_filter_fits(std::size_t input, std::size_t filter, const char* axis) {
    if (filter > input)
        throw DimensionError(std::string("convolve: filter exceeds input along ") + axis);
}

}  // namespace

Tensor3 convolve3d_valid(const Tensor3& x, const Tensor3& w) {
    check_filter_fits(x.depth(), w.depth(), "depth");
    check_filter_fits(x.height(), w.height(), "height");
    check_filter_fits(x.width(), w.width(), "width");

    const std::size_t r = w.depth(), s = w.height(), t = w.width();
    const std::size_t od = x.depth() - r + 1;
    const std::size_t oh = x.height() - s + 1;
    const std::size_t ow = x.width() - t + 1;

    // Reverse the filter once, then accumulate row-wise: for each output row,
    // every filter tap contributes a scaled copy of a contiguous input run.
    Tensor3 wf(r, s, t);
    for (std::size_t u = 0; u < r; ++u)
        for (std::size_t v = 0; v < s; ++v)
            for (std::size_t q = 0; q < t; ++q)
                wf(u, v, q) = w(r - 1 - u, s - 1 - v, t - 1 - q);

    Tensor3 out(od, oh, ow);
    for (std::size_t i = 0; i < od; ++i) {
        for (std::size_t j = 0; j < oh; ++j) {
            double* orow = out.row(i, j).data();
            for (std::size_t u = 0; u < r; ++u) {
                for (std::size_t v = 0; v < s; ++v) {
                    const double* xrow = x.row(i + u, j + v).data();
                    const double* wrow = wf.row(u, v).data();
                    for (std::size_t q = 0; q < t; ++q) {
                        const double coef = wrow[q];
                        const double* xs = xrow + q;
                        for (std::size_t k = 0; k < ow; ++k) orow[k] += coef * xs[k];
                    }
                }
            }
        }
    }
    return out;
}

Matrix convolve2d_valid(const Matrix& x, const Matrix& w) {
    check_filter_fits(x.rows(), w.rows(), "rows");
    check_filter_fits(x.cols(), w.cols(), "cols");

    const std::size_t r = w.rows(), s = w.cols();
    const std::size_t oh = x.rows() - r + 1;
    const std::size_t ow = x.cols() - s + 1;

    Matrix wf(r, s);
    for (std::size_t u = 0; u < r; ++u)
        for (std::size_t v = 0; v < s; ++v) wf(u, v) = w(r - 1 - u, s - 1 - v);

    Matrix out(oh, ow);
    for (std::size_t i = 0; i < oh; ++i) {
        double* orow = out.row(i).data();
        for (std::size_t u = 0; u < r; ++u) {
            const double* xrow = x.row(i + u).data();
            const double* wrow = wf.row(u).data();
            for (std::size_t v = 0; v < s; ++v) {
                const double coef = wrow[v];
                const double* xs = xrow + v;
                for (std::size_t k = 0; k < ow; ++k) orow[k] += coef * xs[k];
            }
        }
    }
    return out;
}

Tensor3 maxpool3d(const Tensor3& fm, std::size_t a, std::size_t b, std::size_t c) {
    if (a == 0 || b == 0 || c == 0)
        throw ParameterError("maxpool3d: window dimensions must be positive");
    const std::size_t od = fm.depth() / a;
    const std::size_t oh = fm.height() / b;
    const std::size_t ow = fm.width() / c;
    if (od == 0 || oh == 0 || ow == 0)
        throw DimensionError("maxpool3d: window larger than input, empty output");

    Tensor3 out(od, oh, ow);
    for (std::size_t i = 0; i < od; ++i) {
        for (std::size_t j = 0; j < oh; ++j) {
            for (std::size_t k = 0; k < ow; ++k) {
                double best = fm(i * a, j * b, k * c);
                for (std::size_t u = 0; u < a; ++u)
                    for (std::size_t v = 0; v < b; ++v) {
                        const double* xrow = fm.row(i * a + u, j * b + v).data() + k * c;
                        for (std::size_t q = 0; q < c; ++q) best = std::max(best, xrow[q]);
                    }
                out(i, j, k) = best;
            }
        }
    }
    return out;
}

Matrix maxpool2d(const Matrix& fm, std::size_t a, std::size_t b) {
    if (a == 0 || b == 0)
        throw ParameterError("maxpool2d: window dimensions must be positive");
    const std::size_t oh = fm.rows() / a;
    const std::size_t ow = fm.cols() / b;
    if (oh == 0 || ow == 0)
        throw DimensionError("maxpool2d: window larger than input, empty output");

    Matrix out(oh, ow);
    for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
            double best = fm(i * a, j * b);
            for (std::size_t u = 0; u < a; ++u) {
                const double* xrow = fm.row(i * a + u).data() + j * b;
                for (std::size_t v = 0; v < b; ++v) best = std::max(best, xrow[v]);
            }
            out(i, j) = best;
        }
    }
    return out;
}

}  // namespace voxelnet
