#include "kvnmd/fft.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "kvnmd/parallel.hpp"

namespace kvnmd {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Radix2Plan {
    int n = 0;
    std::vector<int> bitrev;
    // Twiddles for all stages, packed stage by stage: stage with half-length h
    // contributes h factors exp(-i*pi*k/h), k = 0..h-1.
    std::vector<Complex> twiddle;

    explicit Radix2Plan(int n_) : n(n_) {
        bitrev.resize(n);
        int bits = 0;
        while ((1 << bits) < n) ++bits;
        for (int j = 0; j < n; ++j) {
            int r = 0;
            for (int b = 0; b < bits; ++b)
                if (j & (1 << b)) r |= 1 << (bits - 1 - b);
            bitrev[j] = r;
        }
        for (int h = 1; h < n; h *= 2)
            for (int k = 0; k < h; ++k) {
                const double a = -kTwoPi * 0.5 * k / h;
                twiddle.push_back(Complex(std::cos(a), std::sin(a)));
            }
    }
};

// Butterflies over a bit-reversed buffer laid out as n rows of `width`
// contiguous columns (width = 1 for a single fiber).
void butterflies(Complex* buf, const Radix2Plan& plan, std::ptrdiff_t width, bool inverse) {
    const int n = plan.n;
    const Complex* tw = plan.twiddle.data();
    for (int h = 1; h < n; h *= 2) {
        for (int base = 0; base < n; base += 2 * h) {
            for (int k = 0; k < h; ++k) {
                Complex w = tw[k];
                if (inverse) w = std::conj(w);
                Complex* a = buf + (base + k) * width;
                Complex* b = buf + (base + k + h) * width;
                for (std::ptrdiff_t c = 0; c < width; ++c) {
                    const Complex t = w * b[c];
                    b[c] = a[c] - t;
                    a[c] += t;
                }
            }
        }
        tw += h;
    }
}

void radix2_single(Complex* x, const Radix2Plan& plan, bool inverse) {
    const int n = plan.n;
    for (int j = 0; j < n; ++j) {
        const int r = plan.bitrev[j];
        if (r > j) std::swap(x[j], x[r]);
    }
    butterflies(x, plan, 1, inverse);
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (int j = 0; j < n; ++j) x[j] *= s;
}

// Dense unitary DFT matrix for non-power-of-two lengths.
Eigen::MatrixXcd dft_matrix(int n, bool inverse) {
    Eigen::MatrixXcd f(n, n);
    const double sign = inverse ? 1.0 : -1.0;
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            // Reduce j*k mod n first so the angle stays small.
            const long long m = (static_cast<long long>(j) * k) % n;
            const double a = sign * kTwoPi * static_cast<double>(m) / n;
            f(j, k) = s * Complex(std::cos(a), std::sin(a));
        }
    return f;
}

}  // namespace

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

void fft_inplace(Complex* x, int n, bool inverse) {
    if (n <= 0) throw std::invalid_argument("fft_inplace: length must be positive");
    if (n == 1) return;
    if (is_pow2(n)) {
        Radix2Plan plan(n);
        radix2_single(x, plan, inverse);
        return;
    }
    const Eigen::MatrixXcd f = dft_matrix(n, inverse);
    Eigen::Map<Eigen::VectorXcd> v(x, n);
    Eigen::VectorXcd out = f * v;
    v = out;
}

void fft_axis(Complex* data, int n_axis, std::ptrdiff_t stride, std::ptrdiff_t n_outer,
              bool inverse) {
    if (n_axis <= 0 || stride <= 0 || n_outer <= 0)
        throw std::invalid_argument("fft_axis: bad geometry");
    if (n_axis == 1) return;

    if (!is_pow2(n_axis)) {
        // Dense unitary DFT applied as a matrix product over gathered tiles.
        const Eigen::MatrixXcd f = dft_matrix(n_axis, inverse);
        const std::ptrdiff_t tile_cols = std::min<std::ptrdiff_t>(stride, 64);
        parallel_for_blocks(static_cast<std::size_t>(n_outer), [&](std::size_t lo, std::size_t hi) {
            Eigen::MatrixXcd tile(n_axis, tile_cols), prod(n_axis, tile_cols);
            tile.setZero();
            for (std::size_t o = lo; o < hi; ++o) {
                Complex* slab = data + static_cast<std::ptrdiff_t>(o) * n_axis * stride;
                for (std::ptrdiff_t i0 = 0; i0 < stride; i0 += tile_cols) {
                    const std::ptrdiff_t w = std::min(tile_cols, stride - i0);
                    for (int j = 0; j < n_axis; ++j)
                        std::memcpy(tile.data() + static_cast<std::ptrdiff_t>(j) * tile_cols,
                                    slab + j * stride + i0, sizeof(Complex) * w);
                    // Row-major gather into a column-major Eigen matrix: the
                    // tile above is (col=j of length tile_cols)... map rows.
                    Eigen::Map<Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
                        t(tile.data(), n_axis, tile_cols);
                    Eigen::Map<Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
                        p(prod.data(), n_axis, tile_cols);
                    p.noalias() = f * t;
                    for (int j = 0; j < n_axis; ++j)
                        std::memcpy(slab + j * stride + i0,
                                    prod.data() + static_cast<std::ptrdiff_t>(j) * tile_cols,
                                    sizeof(Complex) * w);
                }
            }
        });
        return;
    }

    Radix2Plan plan(n_axis);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_axis));

    if (stride == 1) {
        // Contiguous fibers: transform each run in place.
        parallel_for_blocks(static_cast<std::size_t>(n_outer), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t o = lo; o < hi; ++o)
                radix2_single(data + static_cast<std::ptrdiff_t>(o) * n_axis, plan, inverse);
        });
        return;
    }

    // Strided fibers: gather a tile of adjacent fibers (rows = axis index in
    // bit-reversed order, columns = neighboring inner offsets), run the
    // butterflies with unit-stride inner loops, scatter back.
    const std::ptrdiff_t tile_cols = std::min<std::ptrdiff_t>(stride, 64);
    parallel_for_blocks(static_cast<std::size_t>(n_outer), [&](std::size_t lo, std::size_t hi) {
        std::vector<Complex> tile(static_cast<std::size_t>(plan.n) * tile_cols);
        for (std::size_t o = lo; o < hi; ++o) {
            Complex* slab = data + static_cast<std::ptrdiff_t>(o) * n_axis * stride;
            for (std::ptrdiff_t i0 = 0; i0 < stride; i0 += tile_cols) {
                const std::ptrdiff_t w = std::min(tile_cols, stride - i0);
                for (int j = 0; j < n_axis; ++j)
                    std::memcpy(tile.data() + static_cast<std::size_t>(plan.bitrev[j]) * tile_cols,
                                slab + j * stride + i0, sizeof(Complex) * w);
                butterflies(tile.data(), plan, tile_cols, inverse);
                for (int j = 0; j < n_axis; ++j) {
                    const Complex* src = tile.data() + static_cast<std::size_t>(j) * tile_cols;
                    Complex* dst = slab + j * stride + i0;
                    for (std::ptrdiff_t c = 0; c < w; ++c) dst[c] = src[c] * scale;
                }
            }
        }
    });
}

}  // namespace kvnmd
