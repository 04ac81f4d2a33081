// Independent reference implementations used as test oracles. Everything here
// is written as a direct transcription of the defining formulas (plain loops,
// at-equivalent indexing) and must stay decoupled from the optimized kernels
// it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "voxelnet/rng.hpp"
#include "voxelnet/tensor.hpp"

namespace oracle {

using voxelnet::Matrix;
using voxelnet::Rng;
using voxelnet::Tensor3;

// out(i,j,k) = sum_{u,v,w} W(r-1-u, s-1-v, t-1-w) * x(i+u, j+v, k+w)
inline Tensor3 conv3d(const Tensor3& x, const Tensor3& w) {
    const std::size_t r = w.depth(), s = w.height(), t = w.width();
    Tensor3 out(x.depth() - r + 1, x.height() - s + 1, x.width() - t + 1);
    for (std::size_t i = 0; i < out.depth(); ++i)
        for (std::size_t j = 0; j < out.height(); ++j)
            for (std::size_t k = 0; k < out.width(); ++k) {
                double acc = 0.0;
                for (std::size_t u = 0; u < r; ++u)
                    for (std::size_t v = 0; v < s; ++v)
                        for (std::size_t q = 0; q < t; ++q)
                            acc += w(r - 1 - u, s - 1 - v, t - 1 - q) *
                                   x(i + u, j + v, k + q);
                out(i, j, k) = acc;
            }
    return out;
}

inline Matrix conv2d(const Matrix& x, const Matrix& w) {
    const std::size_t r = w.rows(), s = w.cols();
    Matrix out(x.rows() - r + 1, x.cols() - s + 1);
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t u = 0; u < r; ++u)
                for (std::size_t v = 0; v < s; ++v)
                    acc += w(r - 1 - u, s - 1 - v) * x(i + u, j + v);
            out(i, j) = acc;
        }
    return out;
}

// Cross-correlation (no filter reversal); conv3d(x,w) must equal
// crosscorr3d(x, reverse(w)).
inline Tensor3 crosscorr3d(const Tensor3& x, const Tensor3& w) {
    const std::size_t r = w.depth(), s = w.height(), t = w.width();
    Tensor3 out(x.depth() - r + 1, x.height() - s + 1, x.width() - t + 1);
    for (std::size_t i = 0; i < out.depth(); ++i)
        for (std::size_t j = 0; j < out.height(); ++j)
            for (std::size_t k = 0; k < out.width(); ++k) {
                double acc = 0.0;
                for (std::size_t u = 0; u < r; ++u)
                    for (std::size_t v = 0; v < s; ++v)
                        for (std::size_t q = 0; q < t; ++q)
                            acc += w(u, v, q) * x(i + u, j + v, k + q);
                out(i, j, k) = acc;
            }
    return out;
}

inline Tensor3 reverse3(const Tensor3& w) {
    Tensor3 out(w.depth(), w.height(), w.width());
    for (std::size_t u = 0; u < w.depth(); ++u)
        for (std::size_t v = 0; v < w.height(); ++v)
            for (std::size_t q = 0; q < w.width(); ++q)
                out(u, v, q) = w(w.depth() - 1 - u, w.height() - 1 - v, w.width() - 1 - q);
    return out;
}

// Exhaustive per-window max scan.
inline Tensor3 maxpool3d(const Tensor3& fm, std::size_t a, std::size_t b, std::size_t c) {
    Tensor3 out(fm.depth() / a, fm.height() / b, fm.width() / c);
    for (std::size_t i = 0; i < out.depth(); ++i)
        for (std::size_t j = 0; j < out.height(); ++j)
            for (std::size_t k = 0; k < out.width(); ++k) {
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t u = 0; u < a; ++u)
                    for (std::size_t v = 0; v < b; ++v)
                        for (std::size_t q = 0; q < c; ++q)
                            best = std::max(best, fm(i * a + u, j * b + v, k * c + q));
                out(i, j, k) = best;
            }
    return out;
}

inline Matrix maxpool2d(const Matrix& fm, std::size_t a, std::size_t b) {
    Matrix out(fm.rows() / a, fm.cols() / b);
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t u = 0; u < a; ++u)
                for (std::size_t v = 0; v < b; ++v)
                    best = std::max(best, fm(i * a + u, j * b + v));
            out(i, j) = best;
        }
    return out;
}

// Extended-precision logistic reference.
inline double sigmoid_ref(double z) {
    const long double e = std::exp(static_cast<long double>(-z));
    return static_cast<double>(1.0L / (1.0L + e));
}

inline Tensor3 random_tensor(Rng& rng, std::size_t d, std::size_t h, std::size_t w,
                             double lo = -1.0, double hi = 1.0) {
    return Tensor3(d, h, w, rng.uniform_vec(lo, hi, d * h * w));
}

inline Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0,
                            double hi = 1.0) {
    return Matrix(r, c, rng.uniform_vec(lo, hi, r * c));
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

// Relative error with an absolute floor, as used by the gradient checks.
inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max({1.0, std::abs(got), std::abs(want)});
}

}  // namespace oracle
