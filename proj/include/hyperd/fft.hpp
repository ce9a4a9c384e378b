#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "hyperd/rng.hpp"
#include "hyperd/tensor.hpp"

namespace hyperd::fft {

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t smallest_factor(std::size_t n) {
  if (n % 2 == 0) return 2;
  for (std::size_t p = 3; p * p <= n; p += 2)
    if (n % p == 0) return p;
  return n;
}

// Iterative radix-2 Cooley-Tukey, no scaling. sign = -1 forward, +1 inverse.
template <typename T>
void fft_pow2(std::vector<std::complex<T>>& a, int sign) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        // per-butterfly polar keeps twiddle error flat across long transforms
        const T ang = T(sign) * T(2) * T(kPi) * T(k) / T(len);
        const std::complex<T> w(std::cos(ang), std::sin(ang));
        const std::complex<T> u = a[i + k];
        const std::complex<T> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

// Direct O(n^2) transform; base case for small prime lengths.
template <typename T>
void dft_direct(std::vector<std::complex<T>>& a, int sign) {
  const std::size_t n = a.size();
  std::vector<std::complex<T>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<T> acc{};
    for (std::size_t t = 0; t < n; ++t) {
      const T ang = T(sign) * T(2) * T(kPi) * T((k * t) % n) / T(n);
      acc += a[t] * std::complex<T>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  a.swap(out);
}

template <typename T>
void fft_any(std::vector<std::complex<T>>& a, int sign);

// Bluestein chirp-z: expresses a length-n transform as a power-of-two circular
// convolution, so large prime lengths stay O(n log n).
template <typename T>
void bluestein(std::vector<std::complex<T>>& a, int sign) {
  const std::size_t n = a.size();
  std::size_t L = 1;
  while (L < 2 * n - 1) L <<= 1;
  std::vector<std::complex<T>> u(L), v(L);
  auto chirp = [&](std::size_t k, int s) {
    // k^2 mod 2n keeps the phase argument small for precision
    const T ang = T(s) * T(kPi) * T((k * k) % (2 * n)) / T(n);
    return std::complex<T>(std::cos(ang), std::sin(ang));
  };
  for (std::size_t k = 0; k < n; ++k) u[k] = a[k] * chirp(k, sign);
  v[0] = std::complex<T>(1, 0);
  for (std::size_t k = 1; k < n; ++k) {
    const std::complex<T> c = chirp(k, -sign);
    v[k] = c;
    v[L - k] = c;
  }
  fft_pow2(u, -1);
  fft_pow2(v, -1);
  for (std::size_t i = 0; i < L; ++i) u[i] *= v[i];
  fft_pow2(u, +1);
  for (std::size_t k = 0; k < n; ++k) u[k] /= T(L);
  for (std::size_t k = 0; k < n; ++k) a[k] = u[k] * chirp(k, sign);
}

// Decimation in time by the smallest prime factor p of n.
template <typename T>
void fft_mixed(std::vector<std::complex<T>>& a, int sign, std::size_t p) {
  const std::size_t n = a.size();
  const std::size_t q = n / p;
  std::vector<std::vector<std::complex<T>>> sub(p, std::vector<std::complex<T>>(q));
  for (std::size_t m = 0; m < q; ++m)
    for (std::size_t r = 0; r < p; ++r) sub[r][m] = a[p * m + r];
  for (auto& s : sub) fft_any(s, sign);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<T> acc{};
    for (std::size_t r = 0; r < p; ++r) {
      const T ang = T(sign) * T(2) * T(kPi) * T((r * k) % n) / T(n);
      acc += sub[r][k % q] * std::complex<T>(std::cos(ang), std::sin(ang));
    }
    a[k] = acc;
  }
}

template <typename T>
void fft_any(std::vector<std::complex<T>>& a, int sign) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  if (is_pow2(n)) {
    fft_pow2(a, sign);
    return;
  }
  const std::size_t p = smallest_factor(n);
  if (p == n) {
    if (n <= 61)
      dft_direct(a, sign);
    else
      bluestein(a, sign);
  } else {
    fft_mixed(a, sign, p);
  }
}

// Visits every 1-D line of `shape` along `axis`: f(base_offset, stride).
template <typename F>
void for_each_line(const std::vector<std::size_t>& shape, std::size_t axis, F&& f) {
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= shape[d];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
  const std::size_t m = shape[axis];
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) f(o * m * inner + i, inner);
}

}  // namespace detail

// Unscaled forward transform, no scaling: X_k = sum_t x_t e^{-2*pi*i*k*t/M}.
template <typename T>
void transform(std::vector<std::complex<T>>& a, bool inverse) {
  detail::fft_any(a, inverse ? +1 : -1);
}

inline std::size_t half_spectrum_len(std::size_t m) { return m / 2 + 1; }

// Half-spectrum transform of a real tensor along `axis`. Unscaled forward.
template <typename T>
void rfft_axis(const Tensor<T>& x, std::size_t axis, Tensor<T>& re, Tensor<T>& im) {
  if (axis >= x.rank()) throw ValidationError("rfft_axis: axis out of range");
  const std::size_t m = x.shape[axis];
  const std::size_t mh = half_spectrum_len(m);
  std::vector<std::size_t> out_shape = x.shape;
  out_shape[axis] = mh;
  re = Tensor<T>(out_shape);
  im = Tensor<T>(out_shape);
  std::vector<std::complex<T>> line(m);
  detail::for_each_line(x.shape, axis, [&](std::size_t base, std::size_t stride) {
    for (std::size_t t = 0; t < m; ++t) line[t] = std::complex<T>(x.data[base + t * stride], 0);
    detail::fft_any(line, -1);
    // the input base offset indexes the output line as well: only the axis
    // extent changed and positions below it are shared
    std::size_t out_base = base / (m * stride) * (mh * stride) + base % stride;
    for (std::size_t k = 0; k < mh; ++k) {
      re.data[out_base + k * stride] = line[k].real();
      im.data[out_base + k * stride] = line[k].imag();
    }
  });
}

// Inverse of rfft_axis: rebuild the full spectrum by conjugate symmetry,
// inverse transform with 1/M scaling, keep the real part.
template <typename T>
Tensor<T> irfft_axis(const Tensor<T>& re, const Tensor<T>& im, std::size_t axis,
                     std::size_t out_len) {
  check_same_shape(re, im, "irfft_axis");
  if (axis >= re.rank()) throw ValidationError("irfft_axis: axis out of range");
  const std::size_t mh = re.shape[axis];
  if (mh != half_spectrum_len(out_len))
    throw ValidationError("irfft_axis: spectrum length " + std::to_string(mh) +
                          " inconsistent with out_len " + std::to_string(out_len));
  const std::size_t m = out_len;
  std::vector<std::size_t> out_shape = re.shape;
  out_shape[axis] = m;
  Tensor<T> out(out_shape);
  std::vector<std::complex<T>> line(m);
  detail::for_each_line(re.shape, axis, [&](std::size_t base, std::size_t stride) {
    for (std::size_t k = 0; k < mh; ++k)
      line[k] = std::complex<T>(re.data[base + k * stride], im.data[base + k * stride]);
    for (std::size_t k = mh; k < m; ++k) line[k] = std::conj(line[m - k]);
    detail::fft_any(line, +1);
    std::size_t out_base = base / (mh * stride) * (m * stride) + base % stride;
    for (std::size_t t = 0; t < m; ++t) out.data[out_base + t * stride] = line[t].real() / T(m);
  });
  return out;
}

// Adjoint of rfft_axis as a linear map R^M -> (R^M', R^M'): unscaled
// inverse-direction transform of the zero-padded half-spectrum gradient.
template <typename T>
Tensor<T> rfft_adjoint(const Tensor<T>& gre, const Tensor<T>& gim, std::size_t axis,
                       std::size_t in_len) {
  check_same_shape(gre, gim, "rfft_adjoint");
  const std::size_t mh = gre.shape[axis];
  const std::size_t m = in_len;
  if (mh != half_spectrum_len(m)) throw ValidationError("rfft_adjoint: length mismatch");
  std::vector<std::size_t> out_shape = gre.shape;
  out_shape[axis] = m;
  Tensor<T> out(out_shape);
  std::vector<std::complex<T>> line(m);
  detail::for_each_line(gre.shape, axis, [&](std::size_t base, std::size_t stride) {
    for (std::size_t k = 0; k < mh; ++k)
      line[k] = std::complex<T>(gre.data[base + k * stride], gim.data[base + k * stride]);
    for (std::size_t k = mh; k < m; ++k) line[k] = std::complex<T>(0, 0);
    detail::fft_any(line, +1);
    std::size_t out_base = base / (mh * stride) * (m * stride) + base % stride;
    for (std::size_t t = 0; t < m; ++t) out.data[out_base + t * stride] = line[t].real();
  });
  return out;
}

// Adjoint of irfft_axis: scaled forward transform of the time-domain gradient,
// mirrored interior bins weighted twice.
template <typename T>
void irfft_adjoint(const Tensor<T>& g, std::size_t axis, Tensor<T>& dre, Tensor<T>& dim) {
  const std::size_t m = g.shape[axis];
  const std::size_t mh = half_spectrum_len(m);
  std::vector<std::size_t> out_shape = g.shape;
  out_shape[axis] = mh;
  dre = Tensor<T>(out_shape);
  dim = Tensor<T>(out_shape);
  std::vector<std::complex<T>> line(m);
  detail::for_each_line(g.shape, axis, [&](std::size_t base, std::size_t stride) {
    for (std::size_t t = 0; t < m; ++t) line[t] = std::complex<T>(g.data[base + t * stride], 0);
    detail::fft_any(line, -1);
    std::size_t out_base = base / (m * stride) * (mh * stride) + base % stride;
    for (std::size_t k = 0; k < mh; ++k) {
      T w = (k == 0 || (m % 2 == 0 && k == m / 2)) ? T(1) : T(2);
      dre.data[out_base + k * stride] = w / T(m) * line[k].real();
      dim.data[out_base + k * stride] = w / T(m) * line[k].imag();
    }
  });
}

}  // namespace hyperd::fft
