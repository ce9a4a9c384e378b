#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "hyperd/fft.hpp"
#include "hyperd/tensor.hpp"

namespace hyperd::ad {

template <typename T>
struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over dense tensors. Every op appends one node whose
// closure scatters the node's accumulated gradient back to its parents.
// Node order is a topological order by construction, so backward() is a
// single reverse sweep.
template <typename T>
class Tape {
 public:
  using BackFn = std::function<void(Tape&, const Tensor<T>&)>;

  Var<T> leaf(Tensor<T> v) { return push(std::move(v), nullptr); }

  Var<T> push(Tensor<T> v, BackFn back) {
    nodes_.push_back(Node{std::move(v), Tensor<T>{}, false, std::move(back)});
    return Var<T>{static_cast<std::int32_t>(nodes_.size() - 1)};
  }

  // For ops whose closure must reference their own output node.
  void rebind_back(Var<T> x, BackFn back) { nodes_[x.id].back = std::move(back); }

  const Tensor<T>& val(Var<T> x) const { return nodes_[x.id].value; }

  // Gradient of the last backward() root w.r.t. x; zeros if x is off-path.
  Tensor<T> grad(Var<T> x) const {
    const Node& n = nodes_[x.id];
    return n.has_grad ? n.grad : Tensor<T>(n.value.shape);
  }

  void accum(Var<T> x, Tensor<T>&& g) {
    Node& n = nodes_[x.id];
    if (!n.has_grad) {
      n.grad = std::move(g);
      n.has_grad = true;
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) n.grad.data[i] += g.data[i];
    }
  }
  void accum(Var<T> x, const Tensor<T>& g) { accum(x, Tensor<T>(g)); }

  void backward(Var<T> root) {
    Tensor<T> seed(nodes_[root.id].value.shape);
    for (auto& x : seed.data) x = T(1);
    accum(root, std::move(seed));
    for (std::int32_t i = root.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.has_grad && n.back) n.back(*this, n.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool has_grad = false;
    BackFn back;
  };
  std::deque<Node> nodes_;  // deque: stable element addresses while growing
};

template <typename T>
struct CVar {
  Var<T> re, im;
};

// ---- raw kernels shared by forward and backward paths ----

namespace kernel {

template <typename T>
Tensor<T> permute(const Tensor<T>& a, const std::vector<std::size_t>& perm) {
  if (perm.size() != a.rank()) throw ValidationError("permute: rank mismatch");
  std::vector<std::size_t> out_shape(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out_shape[i] = a.shape[perm[i]];
  Tensor<T> out(out_shape);
  const std::size_t r = a.rank();
  std::vector<std::size_t> in_strides(r, 1), out_idx(r, 0);
  for (std::size_t d = r; d-- > 1;) in_strides[d - 1] = in_strides[d] * a.shape[d];
  for (std::size_t o = 0; o < out.size(); ++o) {
    std::size_t in_off = 0;
    for (std::size_t d = 0; d < r; ++d) in_off += out_idx[d] * in_strides[perm[d]];
    out.data[o] = a.data[in_off];
    for (std::size_t d = r; d-- > 0;) {
      if (++out_idx[d] < out_shape[d]) break;
      out_idx[d] = 0;
    }
  }
  return out;
}

inline std::vector<std::size_t> inverse_perm(const std::vector<std::size_t>& perm) {
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  return inv;
}

// a: [..., K] flattened to [R, K], b: [K, N] -> out [R, N]
template <typename T>
void matmul_flat(const T* a, const T* b, T* out, std::size_t rows, std::size_t k, std::size_t n) {
  for (std::size_t r = 0; r < rows; ++r) {
    T* orow = out + r * n;
    for (std::size_t j = 0; j < n; ++j) orow[j] = T(0);
    const T* arow = a + r * k;
    for (std::size_t i = 0; i < k; ++i) {
      const T av = arow[i];
      if (av == T(0)) continue;
      const T* brow = b + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

}  // namespace kernel

// ---- elementwise ----

template <typename T>
Var<T> add(Tape<T>& t, Var<T> a, Var<T> b) {
  const auto& av = t.val(a);
  const auto& bv = t.val(b);
  check_same_shape(av, bv, "add");
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += bv.data[i];
  return t.push(std::move(out), [a, b](Tape<T>& tp, const Tensor<T>& g) {
    tp.accum(a, g);
    tp.accum(b, g);
  });
}

template <typename T>
Var<T> sub(Tape<T>& t, Var<T> a, Var<T> b) {
  const auto& av = t.val(a);
  const auto& bv = t.val(b);
  check_same_shape(av, bv, "sub");
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= bv.data[i];
  return t.push(std::move(out), [a, b](Tape<T>& tp, const Tensor<T>& g) {
    tp.accum(a, g);
    Tensor<T> gb = g;
    for (auto& x : gb.data) x = -x;
    tp.accum(b, std::move(gb));
  });
}

template <typename T>
Var<T> mul(Tape<T>& t, Var<T> a, Var<T> b) {
  const auto& av = t.val(a);
  const auto& bv = t.val(b);
  check_same_shape(av, bv, "mul");
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= bv.data[i];
  return t.push(std::move(out), [a, b](Tape<T>& tp, const Tensor<T>& g) {
    Tensor<T> ga = g, gb = g;
    const auto& avv = tp.val(a);
    const auto& bvv = tp.val(b);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga.data[i] *= bvv.data[i];
      gb.data[i] *= avv.data[i];
    }
    tp.accum(a, std::move(ga));
    tp.accum(b, std::move(gb));
  });
}

template <typename T>
Var<T> scale(Tape<T>& t, Var<T> a, T c) {
  Tensor<T> out = t.val(a);
  for (auto& x : out.data) x *= c;
  return t.push(std::move(out), [a, c](Tape<T>& tp, const Tensor<T>& g) {
    Tensor<T> ga = g;
    for (auto& x : ga.data) x *= c;
    tp.accum(a, std::move(ga));
  });
}

// Elementwise product with a constant tensor (no gradient into the mask).
template <typename T>
Var<T> mul_const(Tape<T>& t, Var<T> a, Tensor<T> mask) {
  const auto& av = t.val(a);
  check_same_shape(av, mask, "mul_const");
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= mask.data[i];
  return t.push(std::move(out), [a, mask = std::move(mask)](Tape<T>& tp, const Tensor<T>& g) {
    Tensor<T> ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] *= mask.data[i];
    tp.accum(a, std::move(ga));
  });
}

template <typename T>
Var<T> relu(Tape<T>& t, Var<T> a) {
  Tensor<T> out = t.val(a);
  for (auto& x : out.data)
    if (x < T(0)) x = T(0);
  return t.push(std::move(out), [a](Tape<T>& tp, const Tensor<T>& g) {
    Tensor<T> ga = g;
    const auto& av = tp.val(a);
    for (std::size_t i = 0; i < ga.size(); ++i)
      if (av.data[i] <= T(0)) ga.data[i] = T(0);
    tp.accum(a, std::move(ga));
  });
}

template <typename T>
Var<T> abs(Tape<T>& t, Var<T> a) {
  Tensor<T> out = t.val(a);
  for (auto& x : out.data)
    if (x < T(0)) x = -x;
  return t.push(std::move(out), [a](Tape<T>& tp, const Tensor<T>& g) {
    Tensor<T> ga = g;
    const auto& av = tp.val(a);
    for (std::size_t i = 0; i < ga.size(); ++i) {
      if (av.data[i] < T(0))
        ga.data[i] = -ga.data[i];
      else if (av.data[i] == T(0))
        ga.data[i] = T(0);
    }
    tp.accum(a, std::move(ga));
  });
}

// ---- shape ----

template <typename T>
Var<T> reshape(Tape<T>& t, Var<T> a, std::vector<std::size_t> shape) {
  const auto& av = t.val(a);
  if (Tensor<T>::count(shape) != av.size()) throw ValidationError("reshape: element count mismatch");
  Tensor<T> out = av;
  out.shape = shape;
  std::vector<std::size_t> in_shape = av.shape;
  return t.push(std::move(out), [a, in_shape = std::move(in_shape)](Tape<T>& tp, const Tensor<T>& g) {
    Tensor<T> ga = g;
    ga.shape = in_shape;
    tp.accum(a, std::move(ga));
  });
}

template <typename T>
Var<T> permute(Tape<T>& t, Var<T> a, std::vector<std::size_t> perm) {
  Tensor<T> out = kernel::permute(t.val(a), perm);
  return t.push(std::move(out), [a, perm = std::move(perm)](Tape<T>& tp, const Tensor<T>& g) {
    tp.accum(a, kernel::permute(g, kernel::inverse_perm(perm)));
  });
}

template <typename T>
Var<T> transpose2d(Tape<T>& t, Var<T> a) {
  return permute(t, a, {1, 0});
}

template <typename T>
Var<T> concat_last(Tape<T>& t, Var<T> a, Var<T> b) {
  const auto& av = t.val(a);
  const auto& bv = t.val(b);
  if (av.rank() != bv.rank()) throw ValidationError("concat_last: rank mismatch");
  for (std::size_t d = 0; d + 1 < av.rank(); ++d)
    if (av.shape[d] != bv.shape[d]) throw ValidationError("concat_last: leading shape mismatch");
  const std::size_t da = av.shape.back(), db = bv.shape.back();
  const std::size_t rows = av.size() / da;
  std::vector<std::size_t> out_shape = av.shape;
  out_shape.back() = da + db;
  Tensor<T> out(out_shape);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < da; ++i) out.data[r * (da + db) + i] = av.data[r * da + i];
    for (std::size_t i = 0; i < db; ++i) out.data[r * (da + db) + da + i] = bv.data[r * db + i];
  }
  return t.push(std::move(out), [a, b, da, db, rows](Tape<T>& tp, const Tensor<T>& g) {
    Tensor<T> ga(tp.val(a).shape), gb(tp.val(b).shape);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t i = 0; i < da; ++i) ga.data[r * da + i] = g.data[r * (da + db) + i];
      for (std::size_t i = 0; i < db; ++i) gb.data[r * db + i] = g.data[r * (da + db) + da + i];
    }
    tp.accum(a, std::move(ga));
    tp.accum(b, std::move(gb));
  });
}

// ---- linear algebra ----

// a: [..., K] x b: [K, N] -> [..., N]
template <typename T>
Var<T> matmul(Tape<T>& t, Var<T> a, Var<T> b) {
  const auto& av = t.val(a);
  const auto& bv = t.val(b);
  if (bv.rank() != 2) throw ValidationError("matmul: rhs must be rank 2");
  const std::size_t k = bv.shape[0], n = bv.shape[1];
  if (av.rank() < 1 || av.shape.back() != k)
    throw ValidationError("matmul: inner dimension mismatch " + shape_str(av.shape) + " x " +
                          shape_str(bv.shape));
  const std::size_t rows = av.size() / k;
  std::vector<std::size_t> out_shape = av.shape;
  out_shape.back() = n;
  Tensor<T> out(out_shape);
  kernel::matmul_flat(av.data.data(), bv.data.data(), out.data.data(), rows, k, n);
  return t.push(std::move(out), [a, b, rows, k, n](Tape<T>& tp, const Tensor<T>& g) {
    const auto& avv = tp.val(a);
    const auto& bvv = tp.val(b);
    Tensor<T> ga(avv.shape), gb(bvv.shape);
    // dA = g . b^T
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t i = 0; i < k; ++i) {
        T acc = T(0);
        for (std::size_t j = 0; j < n; ++j) acc += g.data[r * n + j] * bvv.data[i * n + j];
        ga.data[r * k + i] = acc;
      }
    // dB = a^T . g
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t i = 0; i < k; ++i) {
        const T av_ri = avv.data[r * k + i];
        if (av_ri == T(0)) continue;
        for (std::size_t j = 0; j < n; ++j) gb.data[i * n + j] += av_ri * g.data[r * n + j];
      }
    tp.accum(a, std::move(ga));
    tp.accum(b, std::move(gb));
  });
}

// a: [..., D] + bias [D]
template <typename T>
Var<T> add_bias(Tape<T>& t, Var<T> a, Var<T> bias) {
  const auto& av = t.val(a);
  const auto& bv = t.val(bias);
  if (bv.rank() != 1 || av.shape.back() != bv.shape[0])
    throw ValidationError("add_bias: bias length mismatch");
  const std::size_t d = bv.shape[0];
  const std::size_t rows = av.size() / d;
  Tensor<T> out = av;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < d; ++i) out.data[r * d + i] += bv.data[i];
  return t.push(std::move(out), [a, bias, rows, d](Tape<T>& tp, const Tensor<T>& g) {
    tp.accum(a, g);
    Tensor<T> gb(std::vector<std::size_t>{d});
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t i = 0; i < d; ++i) gb.data[i] += g.data[r * d + i];
    tp.accum(bias, std::move(gb));
  });
}

template <typename T>
Var<T> softmax_last(Tape<T>& t, Var<T> a) {
  const auto& av = t.val(a);
  const std::size_t d = av.shape.back();
  const std::size_t rows = av.size() / d;
  Tensor<T> out = av;
  for (std::size_t r = 0; r < rows; ++r) {
    T* row = out.data.data() + r * d;
    T mx = row[0];
    for (std::size_t i = 1; i < d; ++i) mx = std::max(mx, row[i]);
    T sum = T(0);
    for (std::size_t i = 0; i < d; ++i) {
      row[i] = std::exp(row[i] - mx);
      sum += row[i];
    }
    for (std::size_t i = 0; i < d; ++i) row[i] /= sum;
  }
  Var<T> self = t.push(std::move(out), nullptr);
  // closure needs the output value: rebind via the node id
  t.rebind_back(self, [a, self, rows, d](Tape<T>& tp, const Tensor<T>& g) {
    const auto& y = tp.val(self);
    Tensor<T> ga(tp.val(a).shape);
    for (std::size_t r = 0; r < rows; ++r) {
      T dot = T(0);
      for (std::size_t i = 0; i < d; ++i) dot += g.data[r * d + i] * y.data[r * d + i];
      for (std::size_t i = 0; i < d; ++i)
        ga.data[r * d + i] = y.data[r * d + i] * (g.data[r * d + i] - dot);
    }
    tp.accum(a, std::move(ga));
  });
  return self;
}

// P: [L, N], idx: m row indices -> [m, N]. Backward scatter-adds rows.
template <typename T>
Var<T> gather_rows(Tape<T>& t, Var<T> p, std::vector<std::uint32_t> idx) {
  const auto& pv = t.val(p);
  if (pv.rank() != 2) throw ValidationError("gather_rows: table must be rank 2");
  const std::size_t l = pv.shape[0], n = pv.shape[1];
  Tensor<T> out({idx.size(), n});
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] >= l) throw ValidationError("gather_rows: index out of range");
    for (std::size_t c = 0; c < n; ++c) out.data[j * n + c] = pv.data[idx[j] * n + c];
  }
  return t.push(std::move(out), [p, idx = std::move(idx), l, n](Tape<T>& tp, const Tensor<T>& g) {
    Tensor<T> gp({l, n});
    for (std::size_t j = 0; j < idx.size(); ++j)
      for (std::size_t c = 0; c < n; ++c) gp.data[idx[j] * n + c] += g.data[j * n + c];
    tp.accum(p, std::move(gp));
  });
}

// ---- reductions ----

template <typename T>
Var<T> sum_all(Tape<T>& t, Var<T> a) {
  const auto& av = t.val(a);
  Tensor<T> out({std::size_t(1)});
  for (const T& x : av.data) out.data[0] += x;
  return t.push(std::move(out), [a](Tape<T>& tp, const Tensor<T>& g) {
    Tensor<T> ga(tp.val(a).shape, g.data[0]);
    tp.accum(a, std::move(ga));
  });
}

template <typename T>
Var<T> mean_all(Tape<T>& t, Var<T> a) {
  const std::size_t n = t.val(a).size();
  return scale(t, sum_all(t, a), T(1) / T(n));
}

// ---- spectral ----

template <typename T>
CVar<T> rfft(Tape<T>& t, Var<T> x, std::size_t axis) {
  const std::size_t in_len = t.val(x).shape[axis];
  Tensor<T> re, im;
  fft::rfft_axis(t.val(x), axis, re, im);
  Var<T> vre = t.push(std::move(re), [x, axis, in_len](Tape<T>& tp, const Tensor<T>& g) {
    Tensor<T> z(g.shape);
    tp.accum(x, fft::rfft_adjoint(g, z, axis, in_len));
  });
  Var<T> vim = t.push(std::move(im), [x, axis, in_len](Tape<T>& tp, const Tensor<T>& g) {
    Tensor<T> z(g.shape);
    tp.accum(x, fft::rfft_adjoint(z, g, axis, in_len));
  });
  return {vre, vim};
}

template <typename T>
Var<T> irfft(Tape<T>& t, CVar<T> x, std::size_t axis, std::size_t out_len) {
  Tensor<T> out = fft::irfft_axis(t.val(x.re), t.val(x.im), axis, out_len);
  return t.push(std::move(out), [x, axis](Tape<T>& tp, const Tensor<T>& g) {
    Tensor<T> dre, dim;
    fft::irfft_adjoint(g, axis, dre, dim);
    tp.accum(x.re, std::move(dre));
    tp.accum(x.im, std::move(dim));
  });
}

}  // namespace hyperd::ad
