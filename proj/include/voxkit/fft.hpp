#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

#include "voxkit/core.hpp"

// 1D and 3D complex transforms used by the spectral module. Power-of-two
// lines go through an iterative radix-2 FFT; any other length falls back to
// a direct O(n^2) summation with exact twiddle angles, which is slow but
// correct and keeps the library dependency-free. The forward transform is
// unnormalized; inverse normalization is applied by the caller.

namespace voxkit::detail {

inline bool is_pow2(std::size_t n) noexcept {
    return n != 0 && (n & (n - 1)) == 0;
}

/// In-place radix-2 transform. `sign` is the sign of the exponent
/// (-1 forward, +1 inverse). No normalization.
inline void fft_pow2(std::complex<double>* a, std::size_t n, int sign) {
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) {
            j ^= bit;
        }
        j |= bit;
        if (i < j) {
            std::swap(a[i], a[j]);
        }
    }
    std::vector<std::complex<double>> tw(n / 2);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const double ang = static_cast<double>(sign) * 2.0 * std::numbers::pi /
                           static_cast<double>(len);
        for (std::size_t j = 0; j < half; ++j) {
            tw[j] = std::polar(1.0, ang * static_cast<double>(j));
        }
        for (std::size_t base = 0; base < n; base += len) {
            for (std::size_t j = 0; j < half; ++j) {
                const std::complex<double> u = a[base + j];
                const std::complex<double> v = a[base + j + half] * tw[j];
                a[base + j] = u + v;
                a[base + j + half] = u - v;
            }
        }
    }
}

/// Direct summation for arbitrary n. Twiddles indexed modulo n so every
/// angle is computed exactly once.
inline void dft_naive(const std::complex<double>* in, std::complex<double>* out,
                      std::size_t n, int sign) {
    std::vector<std::complex<double>> roots(n);
    const double ang = static_cast<double>(sign) * 2.0 * std::numbers::pi /
                       static_cast<double>(n);
    for (std::size_t m = 0; m < n; ++m) {
        roots[m] = std::polar(1.0, ang * static_cast<double>(m));
    }
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t j = 0; j < n; ++j) {
            acc += in[j] * roots[(j * k) % n];
        }
        out[k] = acc;
    }
}

/// Transform one strided line in place. `scratch` is caller-owned and
/// reused across lines; it is resized as needed.
inline void fft_line(std::complex<double>* data, std::size_t n, std::size_t stride,
                     int sign, std::vector<std::complex<double>>& scratch) {
    if (n == 1) {
        return;
    }
    if (stride == 1 && is_pow2(n)) {
        fft_pow2(data, n, sign);
        return;
    }
    scratch.resize(2 * n);
    std::complex<double>* buf = scratch.data();
    for (std::size_t i = 0; i < n; ++i) {
        buf[i] = data[i * stride];
    }
    if (is_pow2(n)) {
        fft_pow2(buf, n, sign);
        for (std::size_t i = 0; i < n; ++i) {
            data[i * stride] = buf[i];
        }
    } else {
        dft_naive(buf, buf + n, n, sign);
        for (std::size_t i = 0; i < n; ++i) {
            data[i * stride] = buf[n + i];
        }
    }
}

/// Separable 3D transform over every axis of the grid, in place.
inline void transform3(Grid3<std::complex<double>>& g, int sign) {
    const Dims3 dims = g.dims();
    const std::size_t D = dims.depth, H = dims.height, W = dims.width;
    std::vector<std::complex<double>> scratch;
    std::complex<double>* p = g.data();

    for (std::size_t d = 0; d < D; ++d) {
        for (std::size_t h = 0; h < H; ++h) {
            fft_line(p + (d * H + h) * W, W, 1, sign, scratch);
        }
    }
    for (std::size_t d = 0; d < D; ++d) {
        for (std::size_t w = 0; w < W; ++w) {
            fft_line(p + d * H * W + w, H, W, sign, scratch);
        }
    }
    for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t w = 0; w < W; ++w) {
            fft_line(p + h * W + w, D, H * W, sign, scratch);
        }
    }
}

} // namespace voxkit::detail
