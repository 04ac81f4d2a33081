#pragma once

#include <span>
#include <vector>

#include "voxelnet/tensor.hpp"

namespace voxelnet {

// Numerically safe logistic function; branches on the sign of z so exp never
// overflows, and the result is clamped to stay strictly inside (0,1).
double sigmoid(double z);

void sigmoid_inplace(std::span<double> v);
std::vector<double> sigmoid(std::vector<double> v);

// Valid 3D convolution with the filter index-reversed along all three axes
// (true convolution, not cross-correlation). An input of size m*p*q and a
// filter of size r*s*t give an output of size (m-r+1)*(p-s+1)*(q-t+1):
//
//   out(i,j,k) = sum_{u,v,w} w(r-1-u, s-1-v, t-1-w) * x(i+u, j+v, k+w)
Tensor3 convolve3d_valid(const Tensor3& x, const Tensor3& w);

// 2D analogue of convolve3d_valid.
Matrix convolve2d_valid(const Matrix& x, const Matrix& w);

// Non-overlapping max-pooling; trailing partial windows are discarded, so the
// output shape is (floor(d/a), floor(h/b), floor(w/c)).
Tensor3 maxpool3d(const Tensor3& fm, std::size_t a, std::size_t b, std::size_t c);

// 2D analogue of maxpool3d.
Matrix maxpool2d(const Matrix& fm, std::size_t a, std::size_t b);

}  // namespace voxelnet
