#include <catch2/catch_amalgamated.hpp>

#include "hyperd/fft.hpp"
#include "hyperd/rng.hpp"
#include "oracles.hpp"

using hyperd::Rng;
using hyperd::Tensor;
namespace fft = hyperd::fft;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

TEST_CASE("rfft of a constant signal is DC-only") {
  Tensor<double> x({4});
  for (auto& v : x.data) v = 2.5;
  Tensor<double> re, im;
  fft::rfft_axis(x, 0, re, im);
  REQUIRE(re.shape == std::vector<std::size_t>{3});
  CHECK(re.at(0) == Catch::Approx(10.0));
  CHECK(im.at(0) == Catch::Approx(0.0).margin(1e-12));
  for (std::size_t k = 1; k < 3; ++k) {
    CHECK(std::abs(re.at(k)) < 1e-12);
    CHECK(std::abs(im.at(k)) < 1e-12);
  }
}

TEST_CASE("rfft of an impulse is flat") {
  Tensor<double> x({4});
  x.at(0) = 1.0;
  Tensor<double> re, im;
  fft::rfft_axis(x, 0, re, im);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(re.at(k) == Catch::Approx(1.0));
    CHECK(std::abs(im.at(k)) < 1e-12);
  }
}

TEST_CASE("rfft matches the direct DFT sum on awkward lengths") {
  Rng rng(7);
  for (std::size_t n : {1, 2, 3, 5, 6, 7, 12, 16, 61, 67, 307}) {
    auto v = random_vec(rng, n);
    Tensor<double> x({n});
    x.data = v;
    Tensor<double> re, im;
    fft::rfft_axis(x, 0, re, im);
    auto want = oracle::rdft(v);
    for (std::size_t k = 0; k < want.size(); ++k) {
      CHECK(std::abs(re.at(k) - want[k].real()) < 1e-10);
      CHECK(std::abs(im.at(k) - want[k].imag()) < 1e-10);
    }
  }
}

TEST_CASE("irfft reconstructs a DC bin as a constant") {
  Tensor<double> re({3}), im({3});
  re.at(0) = 5 * 3.0;  // M * c
  Tensor<double> x = fft::irfft_axis(re, im, 0, 5);
  for (std::size_t t = 0; t < 5; ++t) CHECK(x.at(t) == Catch::Approx(3.0));
}

TEST_CASE("rfft/irfft round trip on every axis of a rank-3 tensor") {
  Rng rng(11);
  Tensor<double> x({3, 5, 4});
  for (auto& v : x.data) v = rng.uniform(-2.0, 2.0);
  for (std::size_t axis = 0; axis < 3; ++axis) {
    Tensor<double> re, im;
    fft::rfft_axis(x, axis, re, im);
    Tensor<double> back = fft::irfft_axis(re, im, axis, x.shape[axis]);
    CHECK(hyperd::max_abs_diff(x, back) < 1e-10);
  }
}

TEST_CASE("irfft is linear") {
  Rng rng(13);
  Tensor<double> re1({4}), im1({4}), re2({4}), im2({4});
  for (auto* t : {&re1, &im1, &re2, &im2})
    for (auto& v : t->data) v = rng.uniform(-1.0, 1.0);
  Tensor<double> sum_re = re1, sum_im = im1;
  for (std::size_t i = 0; i < 4; ++i) {
    sum_re.data[i] += re2.data[i];
    sum_im.data[i] += im2.data[i];
  }
  auto a = fft::irfft_axis(re1, im1, 0, 6);
  auto b = fft::irfft_axis(re2, im2, 0, 6);
  auto c = fft::irfft_axis(sum_re, sum_im, 0, 6);
  for (std::size_t t = 0; t < 6; ++t) CHECK(c.at(t) == Catch::Approx(a.at(t) + b.at(t)));
}

TEST_CASE("Parseval identity on random vectors") {
  Rng rng(17);
  for (std::size_t m : {4, 5, 9, 12, 31}) {
    auto v = random_vec(rng, m);
    Tensor<double> x({m});
    x.data = v;
    Tensor<double> re, im;
    fft::rfft_axis(x, 0, re, im);
    double lhs = 0.0;
    for (double xv : v) lhs += xv * xv;
    const std::size_t mh = m / 2 + 1;
    double rhs = re.at(0) * re.at(0) + im.at(0) * im.at(0);
    for (std::size_t k = 1; k + 1 < mh; ++k)
      rhs += 2.0 * (re.at(k) * re.at(k) + im.at(k) * im.at(k));
    double c = (m % 2 == 0) ? 1.0 : 2.0;
    rhs += c * (re.at(mh - 1) * re.at(mh - 1) + im.at(mh - 1) * im.at(mh - 1));
    rhs /= double(m);
    CHECK(oracle::rel_err(rhs, lhs) < 1e-8);
  }
}

TEST_CASE("complex transform inverse matches the direct inverse sum") {
  Rng rng(19);
  for (std::size_t n : {6, 7, 10, 307}) {
    std::vector<std::complex<double>> x(n);
    for (auto& c : x) c = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    auto got = x;
    fft::transform(got, true);
    for (auto& c : got) c /= double(n);
    auto want = oracle::idft(x);
    for (std::size_t t = 0; t < n; ++t) CHECK(std::abs(got[t] - want[t]) < 1e-10);
  }
}

TEST_CASE("length-1 transforms are the identity") {
  Tensor<double> x({1, 3});
  x.at(0, 0) = 1.5;
  x.at(0, 1) = -2.0;
  x.at(0, 2) = 0.25;
  Tensor<double> re, im;
  fft::rfft_axis(x, 0, re, im);
  REQUIRE(re.shape == x.shape);
  CHECK(hyperd::max_abs_diff(re, x) == 0.0);
  CHECK(hyperd::max_abs(im) == 0.0);
  Tensor<double> back = fft::irfft_axis(re, im, 0, 1);
  CHECK(hyperd::max_abs_diff(back, x) == 0.0);
}

TEST_CASE("irfft rejects inconsistent output length") {
  Tensor<double> re({3}), im({3});
  CHECK_THROWS_AS(fft::irfft_axis(re, im, 0, 7), hyperd::ValidationError);
}
