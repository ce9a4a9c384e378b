#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hyperd {

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense row-major tensor with a dynamic shape. Rank stays small (<= 4).
template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s, T fill = T(0))
      : shape(std::move(s)), data(count(shape), fill) {}

  static std::size_t count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
  }

  static Tensor zeros_like(const Tensor& o) { return Tensor(o.shape); }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape[i]; }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  template <typename... Is>
  std::size_t offset(Is... idx) const {
    assert(sizeof...(Is) == shape.size());
    const std::size_t is[] = {static_cast<std::size_t>(idx)...};
    std::size_t off = 0;
    for (std::size_t d = 0; d < sizeof...(Is); ++d) {
      assert(is[d] < shape[d]);
      off = off * shape[d] + is[d];
    }
    return off;
  }

  template <typename... Is>
  T& at(Is... idx) {
    return data[offset(idx...)];
  }
  template <typename... Is>
  const T& at(Is... idx) const {
    return data[offset(idx...)];
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

template <typename T>
T max_abs(const Tensor<T>& t) {
  T m = T(0);
  for (const T& v : t.data) {
    T a = v < T(0) ? -v : v;
    if (a > m) m = a;
  }
  return m;
}

template <typename T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b)) throw ValidationError("max_abs_diff: shape mismatch");
  T m = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    T d = a.data[i] - b.data[i];
    if (d < T(0)) d = -d;
    if (d > m) m = d;
  }
  return m;
}

template <typename T>
bool all_finite(const Tensor<T>& t) {
  for (const T& v : t.data)
    if (!std::isfinite(static_cast<double>(v))) return false;
  return true;
}

inline std::string shape_str(const std::vector<std::size_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* where) {
  if (!a.same_shape(b))
    throw ValidationError(std::string(where) + ": shape mismatch " + shape_str(a.shape) +
                          " vs " + shape_str(b.shape));
}

}  // namespace hyperd
