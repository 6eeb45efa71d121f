#pragma once

#include <complex>
#include <cstddef>

namespace kvnmd {

using Complex = std::complex<double>;

// Unitary discrete Fourier transform of one contiguous length-n signal,
// normalized by 1/sqrt(n) in both directions so forward followed by inverse is
// the identity to roundoff. Forward convention:
//   X[f] = n^{-1/2} sum_j x[j] exp(-2*pi*i*f*j/n)
// Powers of two use an iterative radix-2 kernel; other lengths fall back to a
// precomputed dense DFT matrix (exact to roundoff, O(n^2)).
void fft_inplace(Complex* x, int n, bool inverse);

// Transform along one axis of a row-major multidimensional array.
//   n_axis  : length of the transformed axis
//   stride  : element stride between consecutive points along the axis
//   n_outer : number of slabs before the axis (slower-varying indices)
// For each (outer, inner) pair with inner in [0, stride) the fiber
//   data[outer*n_axis*stride + j*stride + inner], j = 0..n_axis-1
// is transformed independently. Fibers are batched into contiguous tiles so
// the butterflies run over unit-stride rows.
void fft_axis(Complex* data, int n_axis, std::ptrdiff_t stride, std::ptrdiff_t n_outer,
              bool inverse);

bool is_pow2(int n);

}  // namespace kvnmd
