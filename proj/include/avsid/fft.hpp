#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

#include "avsid/error.hpp"

namespace avsid {

using Complex = std::complex<double>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

namespace detail {

// Iterative radix-2 Cooley-Tukey. Power-of-two lengths only; the GCC
// frames in this library are zero-padded to a power of two by contract.
inline void fft_in_place(std::vector<Complex>& a, bool inverse) {
    const std::size_t n = a.size();
    if (!is_power_of_two(n)) throw ShapeError("fft: length must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const Complex wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            Complex w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const Complex u = a[i + k];
                const Complex v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv;
    }
}

}  // namespace detail

inline std::vector<Complex> fft(std::vector<Complex> a) {
    detail::fft_in_place(a, false);
    return a;
}

inline std::vector<Complex> ifft(std::vector<Complex> a) {
    detail::fft_in_place(a, true);
    return a;
}

// Forward transform of a real signal zero-padded to padded_len.
inline std::vector<Complex> fft_real(const std::vector<double>& x, std::size_t padded_len) {
    if (padded_len < x.size()) throw ShapeError("fft_real: padded length shorter than signal");
    std::vector<Complex> a(padded_len, Complex(0.0, 0.0));
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = Complex(x[i], 0.0);
    detail::fft_in_place(a, false);
    return a;
}

}  // namespace avsid
