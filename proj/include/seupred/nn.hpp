#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "seupred/errors.hpp"
#include "seupred/graphgen.hpp"

namespace seupred {

/// Dense row-major tensor. Templated on the scalar so the whole network can
/// run in float (the training path) or double (the shadow path used by the
/// finite-difference gradient checks).
template <typename T>
struct TensorT {
  std::vector<int> shape;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(std::vector<int> shp) : shape(std::move(shp)) {
    data.assign(numel_of(shape), T(0));
  }
  TensorT(std::vector<int> shp, std::vector<T> d) : shape(std::move(shp)), data(std::move(d)) {
    if (data.size() != numel_of(shape))
      throw ShapeMismatch("tensor data size does not match its shape");
  }

  static size_t numel_of(const std::vector<int>& s) {
    size_t p = 1;
    for (int d : s) {
      if (d < 0) throw ShapeMismatch("negative tensor dimension");
      p *= static_cast<size_t>(d);
    }
    return p;
  }
  size_t numel() const { return data.size(); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[i]; }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  bool operator==(const TensorT& o) const { return shape == o.shape && data == o.data; }
};

using Tensor = TensorT<float>;

/// Edge list in plain index form, the structural input every graph layer
/// consumes. Self-loops are implicit (never listed).
struct GraphIndex {
  int n = 0;
  std::vector<int> src;
  std::vector<int> dst;

  size_t num_edges() const { return src.size(); }
  std::vector<int> in_degree() const {
    std::vector<int> deg(n, 0);
    for (int d : dst) deg[d]++;
    return deg;
  }
};

GraphIndex graph_index(const SpatialGraph& g);

template <typename T>
TensorT<T> edge_feature_tensor(const SpatialGraph& g) {
  TensorT<T> y({static_cast<int>(g.num_edges()), g.c});
  for (size_t i = 0; i < g.edge_feat.size(); ++i) y.data[i] = static_cast<T>(g.edge_feat[i]);
  return y;
}

namespace detail {
inline std::string shape_str(const std::vector<int>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}
}  // namespace detail

/// Reverse-mode tape. Each op appends a node holding the forward value and a
/// closure that scatters the node's gradient back to its operands. All
/// reductions accumulate in double regardless of T.
template <typename T>
class TapeT {
 public:
  using Ten = TensorT<T>;

  TapeT() = default;
  TapeT(const TapeT&) = delete;
  TapeT& operator=(const TapeT&) = delete;

  int input(Ten v) { return push(std::move(v), nullptr); }

  const Ten& val(int id) const { return nodes_[id].value; }
  const Ten& grad(int id) const { return nodes_[id].grad; }
  size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  int matmul(int a, int b) {
    const Ten& A = nodes_[a].value;
    const Ten& B = nodes_[b].value;
    if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0))
      throw ShapeMismatch("matmul " + detail::shape_str(A.shape) + " x " +
                          detail::shape_str(B.shape));
    int R = A.dim(0), K = A.dim(1), C = B.dim(1);
    Ten out({R, C});
    for (int i = 0; i < R; ++i)
      for (int j = 0; j < C; ++j) {
        double acc = 0;
        for (int k = 0; k < K; ++k)
          acc += static_cast<double>(A.data[i * K + k]) * B.data[k * C + j];
        out.data[i * C + j] = static_cast<T>(acc);
      }
    return push(std::move(out), [this, a, b, R, K, C](int id) {
      const Ten& G = nodes_[id].grad;
      const Ten& A2 = nodes_[a].value;
      const Ten& B2 = nodes_[b].value;
      Ten& dA = nodes_[a].grad;
      Ten& dB = nodes_[b].grad;
      for (int i = 0; i < R; ++i)
        for (int k = 0; k < K; ++k) {
          double acc = 0;
          for (int j = 0; j < C; ++j)
            acc += static_cast<double>(G.data[i * C + j]) * B2.data[k * C + j];
          dA.data[i * K + k] += static_cast<T>(acc);
        }
      for (int k = 0; k < K; ++k)
        for (int j = 0; j < C; ++j) {
          double acc = 0;
          for (int i = 0; i < R; ++i)
            acc += static_cast<double>(A2.data[i * K + k]) * G.data[i * C + j];
          dB.data[k * C + j] += static_cast<T>(acc);
        }
    });
  }

  int add(int a, int b) { return binary(a, b, "add", 1, 1); }
  int sub(int a, int b) { return binary(a, b, "sub", 1, -1); }

  int mul(int a, int b) {
    same_shape(a, b, "mul");
    Ten out = nodes_[a].value;
    for (size_t i = 0; i < out.numel(); ++i) out.data[i] *= nodes_[b].value.data[i];
    return push(std::move(out), [this, a, b](int id) {
      const Ten& G = nodes_[id].grad;
      for (size_t i = 0; i < G.numel(); ++i) {
        nodes_[a].grad.data[i] += G.data[i] * nodes_[b].value.data[i];
        nodes_[b].grad.data[i] += G.data[i] * nodes_[a].value.data[i];
      }
    });
  }

  int scale(int a, T s) {
    Ten out = nodes_[a].value;
    for (auto& v : out.data) v *= s;
    return push(std::move(out), [this, a, s](int id) {
      const Ten& G = nodes_[id].grad;
      for (size_t i = 0; i < G.numel(); ++i) nodes_[a].grad.data[i] += G.data[i] * s;
    });
  }

  /// [R x D] scaled per row by a [R x 1] column of learned values.
  int mul_col(int a, int v) {
    const Ten& A = nodes_[a].value;
    const Ten& V = nodes_[v].value;
    if (A.rank() != 2 || V.rank() != 2 || V.dim(1) != 1 || V.dim(0) != A.dim(0))
      throw ShapeMismatch("mul_col " + detail::shape_str(A.shape) + " by " +
                          detail::shape_str(V.shape));
    int R = A.dim(0), D = A.dim(1);
    Ten out({R, D});
    for (int i = 0; i < R; ++i)
      for (int j = 0; j < D; ++j) out.data[i * D + j] = A.data[i * D + j] * V.data[i];
    return push(std::move(out), [this, a, v, R, D](int id) {
      const Ten& G = nodes_[id].grad;
      const Ten& A2 = nodes_[a].value;
      const Ten& V2 = nodes_[v].value;
      for (int i = 0; i < R; ++i) {
        double acc = 0;
        for (int j = 0; j < D; ++j) {
          nodes_[a].grad.data[i * D + j] += G.data[i * D + j] * V2.data[i];
          acc += static_cast<double>(G.data[i * D + j]) * A2.data[i * D + j];
        }
        nodes_[v].grad.data[i] += static_cast<T>(acc);
      }
    });
  }

  /// Rows scaled by fixed constants (graph normalization coefficients).
  int row_scale_const(int a, std::vector<T> coeff) {
    const Ten& A = nodes_[a].value;
    if (A.rank() != 2 || coeff.size() != static_cast<size_t>(A.dim(0)))
      throw ShapeMismatch("row_scale_const needs one coefficient per row");
    int R = A.dim(0), D = A.dim(1);
    Ten out({R, D});
    for (int i = 0; i < R; ++i)
      for (int j = 0; j < D; ++j) out.data[i * D + j] = A.data[i * D + j] * coeff[i];
    return push(std::move(out), [this, a, R, D, coeff = std::move(coeff)](int id) {
      const Ten& G = nodes_[id].grad;
      for (int i = 0; i < R; ++i)
        for (int j = 0; j < D; ++j)
          nodes_[a].grad.data[i * D + j] += G.data[i * D + j] * coeff[i];
    });
  }

  int relu(int a) {
    Ten out = nodes_[a].value;
    for (auto& v : out.data) v = v > T(0) ? v : T(0);
    return push(std::move(out), [this, a](int id) {
      const Ten& G = nodes_[id].grad;
      const Ten& A = nodes_[a].value;
      for (size_t i = 0; i < G.numel(); ++i)
        if (A.data[i] > T(0)) nodes_[a].grad.data[i] += G.data[i];
    });
  }

  int leaky_relu(int a, T slope) {
    Ten out = nodes_[a].value;
    for (auto& v : out.data) v = v > T(0) ? v : slope * v;
    return push(std::move(out), [this, a, slope](int id) {
      const Ten& G = nodes_[id].grad;
      const Ten& A = nodes_[a].value;
      for (size_t i = 0; i < G.numel(); ++i)
        nodes_[a].grad.data[i] += G.data[i] * (A.data[i] > T(0) ? T(1) : slope);
    });
  }

  int sigmoid(int a) {
    Ten out = nodes_[a].value;
    for (auto& v : out.data) v = T(1) / (T(1) + std::exp(-v));
    return push(std::move(out), [this, a](int id) {
      const Ten& G = nodes_[id].grad;
      const Ten& Y = nodes_[id].value;
      for (size_t i = 0; i < G.numel(); ++i)
        nodes_[a].grad.data[i] += G.data[i] * Y.data[i] * (T(1) - Y.data[i]);
    });
  }

  int reshape(int a, std::vector<int> shape) {
    if (Ten::numel_of(shape) != nodes_[a].value.numel())
      throw ShapeMismatch("reshape to incompatible size");
    Ten out;
    out.shape = std::move(shape);
    out.data = nodes_[a].value.data;
    return push(std::move(out), [this, a](int id) {
      const Ten& G = nodes_[id].grad;
      for (size_t i = 0; i < G.numel(); ++i) nodes_[a].grad.data[i] += G.data[i];
    });
  }

  int concat_rows(std::vector<int> ids) {
    if (ids.empty()) throw ShapeMismatch("concat_rows of nothing");
    int D = nodes_[ids[0]].value.dim(1);
    int R = 0;
    for (int id : ids) {
      const Ten& v = nodes_[id].value;
      if (v.rank() != 2 || v.dim(1) != D) throw ShapeMismatch("concat_rows column mismatch");
      R += v.dim(0);
    }
    Ten out({R, D});
    size_t off = 0;
    for (int id : ids) {
      const auto& d = nodes_[id].value.data;
      std::copy(d.begin(), d.end(), out.data.begin() + off);
      off += d.size();
    }
    return push(std::move(out), [this, ids = std::move(ids)](int id) {
      const Ten& G = nodes_[id].grad;
      size_t off = 0;
      for (int src : ids) {
        auto& g = nodes_[src].grad.data;
        for (size_t i = 0; i < g.size(); ++i) g[i] += G.data[off + i];
        off += g.size();
      }
    });
  }

  /// Concatenate along the last axis; all leading dimensions must agree.
  int concat_last(std::vector<int> ids) {
    if (ids.empty()) throw ShapeMismatch("concat_last of nothing");
    std::vector<int> lead = nodes_[ids[0]].value.shape;
    lead.pop_back();
    size_t rows = 1;
    for (int d : lead) rows *= static_cast<size_t>(d);
    int total_last = 0;
    std::vector<int> lasts;
    for (int id : ids) {
      const Ten& v = nodes_[id].value;
      std::vector<int> l = v.shape;
      int last = l.back();
      l.pop_back();
      if (l != lead) throw ShapeMismatch("concat_last leading-dimension mismatch");
      lasts.push_back(last);
      total_last += last;
    }
    std::vector<int> out_shape = lead;
    out_shape.push_back(total_last);
    Ten out(out_shape);
    for (size_t r = 0; r < rows; ++r) {
      size_t off = r * total_last;
      for (size_t k = 0; k < ids.size(); ++k) {
        const auto& d = nodes_[ids[k]].value.data;
        std::copy(d.begin() + r * lasts[k], d.begin() + (r + 1) * lasts[k],
                  out.data.begin() + off);
        off += lasts[k];
      }
    }
    return push(std::move(out),
                [this, ids = std::move(ids), lasts = std::move(lasts), rows, total_last](int id) {
                  const Ten& G = nodes_[id].grad;
                  for (size_t r = 0; r < rows; ++r) {
                    size_t off = r * total_last;
                    for (size_t k = 0; k < ids.size(); ++k) {
                      auto& g = nodes_[ids[k]].grad.data;
                      for (int j = 0; j < lasts[k]; ++j)
                        g[r * lasts[k] + j] += G.data[off + j];
                      off += lasts[k];
                    }
                  }
                });
  }

  int gather_rows(int a, std::vector<int> idx) {
    const Ten& A = nodes_[a].value;
    if (A.rank() != 2) throw ShapeMismatch("gather_rows needs a matrix");
    int D = A.dim(1);
    Ten out({static_cast<int>(idx.size()), D});
    for (size_t r = 0; r < idx.size(); ++r)
      std::copy(A.data.begin() + static_cast<size_t>(idx[r]) * D,
                A.data.begin() + static_cast<size_t>(idx[r] + 1) * D,
                out.data.begin() + r * D);
    return push(std::move(out), [this, a, D, idx = std::move(idx)](int id) {
      const Ten& G = nodes_[id].grad;
      auto& g = nodes_[a].grad.data;
      for (size_t r = 0; r < idx.size(); ++r)
        for (int j = 0; j < D; ++j)
          g[static_cast<size_t>(idx[r]) * D + j] += G.data[r * D + j];
    });
  }

  /// out[idx[r]] += a[r]; rows with the same index accumulate in edge-list
  /// order through a double buffer.
  int scatter_add_rows(int a, std::vector<int> idx, int out_rows) {
    const Ten& A = nodes_[a].value;
    if (A.rank() != 2 || idx.size() != static_cast<size_t>(A.dim(0)))
      throw ShapeMismatch("scatter_add_rows needs one index per row");
    int D = A.dim(1);
    std::vector<double> acc(static_cast<size_t>(out_rows) * D, 0.0);
    for (size_t r = 0; r < idx.size(); ++r)
      for (int j = 0; j < D; ++j)
        acc[static_cast<size_t>(idx[r]) * D + j] += static_cast<double>(A.data[r * D + j]);
    Ten out({out_rows, D});
    for (size_t i = 0; i < out.numel(); ++i) out.data[i] = static_cast<T>(acc[i]);
    return push(std::move(out), [this, a, D, idx = std::move(idx)](int id) {
      const Ten& G = nodes_[id].grad;
      auto& g = nodes_[a].grad.data;
      for (size_t r = 0; r < idx.size(); ++r)
        for (int j = 0; j < D; ++j)
          g[r * D + j] += G.data[static_cast<size_t>(idx[r]) * D + j];
    });
  }

  /// Softmax of a [R x 1] score column within each segment (max-subtracted).
  int segment_softmax(int a, std::vector<int> seg, int n_seg) {
    const Ten& A = nodes_[a].value;
    if (A.rank() != 2 || A.dim(1) != 1 || seg.size() != static_cast<size_t>(A.dim(0)))
      throw ShapeMismatch("segment_softmax needs an [R x 1] column and one segment per row");
    size_t R = seg.size();
    std::vector<double> mx(n_seg, -1e300), denom(n_seg, 0.0);
    for (size_t r = 0; r < R; ++r)
      mx[seg[r]] = std::max(mx[seg[r]], static_cast<double>(A.data[r]));
    Ten out({static_cast<int>(R), 1});
    std::vector<double> ex(R);
    for (size_t r = 0; r < R; ++r) {
      ex[r] = std::exp(static_cast<double>(A.data[r]) - mx[seg[r]]);
      denom[seg[r]] += ex[r];
    }
    for (size_t r = 0; r < R; ++r) out.data[r] = static_cast<T>(ex[r] / denom[seg[r]]);
    return push(std::move(out), [this, a, n_seg, seg = std::move(seg)](int id) {
      const Ten& G = nodes_[id].grad;
      const Ten& Y = nodes_[id].value;
      std::vector<double> dot(n_seg, 0.0);
      for (size_t r = 0; r < seg.size(); ++r)
        dot[seg[r]] += static_cast<double>(G.data[r]) * Y.data[r];
      for (size_t r = 0; r < seg.size(); ++r)
        nodes_[a].grad.data[r] +=
            static_cast<T>(Y.data[r] * (static_cast<double>(G.data[r]) - dot[seg[r]]));
    });
  }

  /// Normalize the last axis to zero mean and unit variance (no affine).
  int layer_norm(int a, T eps) {
    const Ten& A = nodes_[a].value;
    if (A.rank() < 1) throw ShapeMismatch("layer_norm needs at least rank 1");
    int D = A.shape.back();
    if (D < 1) throw ShapeMismatch("layer_norm over an empty axis");
    size_t rows = A.numel() / D;
    Ten out(A.shape);
    std::vector<double> inv_sigma(rows);
    for (size_t r = 0; r < rows; ++r) {
      double mu = 0;
      for (int j = 0; j < D; ++j) mu += A.data[r * D + j];
      mu /= D;
      double var = 0;
      for (int j = 0; j < D; ++j) {
        double d = A.data[r * D + j] - mu;
        var += d * d;
      }
      var /= D;
      double is = 1.0 / std::sqrt(var + static_cast<double>(eps));
      inv_sigma[r] = is;
      for (int j = 0; j < D; ++j)
        out.data[r * D + j] = static_cast<T>((A.data[r * D + j] - mu) * is);
    }
    return push(std::move(out), [this, a, D, rows, inv_sigma = std::move(inv_sigma)](int id) {
      const Ten& G = nodes_[id].grad;
      const Ten& Y = nodes_[id].value;
      for (size_t r = 0; r < rows; ++r) {
        double gmean = 0, gydot = 0;
        for (int j = 0; j < D; ++j) {
          gmean += G.data[r * D + j];
          gydot += static_cast<double>(G.data[r * D + j]) * Y.data[r * D + j];
        }
        gmean /= D;
        gydot /= D;
        for (int j = 0; j < D; ++j)
          nodes_[a].grad.data[r * D + j] +=
              static_cast<T>(inv_sigma[r] *
                             (G.data[r * D + j] - gmean - Y.data[r * D + j] * gydot));
      }
    });
  }

  /// Dilated 1-D convolution over the leading (time) axis.
  /// x: [t x n x c_in], theta: [K x c_in x c_out].
  /// valid mode: t' = t - dilation*(K-1); causal mode prepends that many
  /// zero steps so t' = t.
  int temporal_conv(int x, int theta, int dilation, bool causal) {
    const Ten& X = nodes_[x].value;
    const Ten& W = nodes_[theta].value;
    if (X.rank() != 3 || W.rank() != 3 || X.dim(2) != W.dim(1))
      throw ShapeMismatch("temporal_conv " + detail::shape_str(X.shape) + " with kernel " +
                          detail::shape_str(W.shape));
    if (dilation < 1) throw ShapeMismatch("temporal_conv dilation must be >= 1");
    int t = X.dim(0), n = X.dim(1), ci = X.dim(2);
    int K = W.dim(0), co = W.dim(2);
    int span = dilation * (K - 1);
    int pad = causal ? span : 0;
    int t_out = t - span + pad;
    if (t_out < 1)
      throw WindowTooSmall(span + 1, t);
    Ten out({t_out, n, co});
    for (int i = 0; i < t_out; ++i)
      for (int v = 0; v < n; ++v)
        for (int o = 0; o < co; ++o) {
          double acc = 0;
          for (int k = 0; k < K; ++k) {
            int ti = i + dilation * k - pad;
            if (ti < 0 || ti >= t) continue;
            for (int q = 0; q < ci; ++q)
              acc += static_cast<double>(
                         X.data[(static_cast<size_t>(ti) * n + v) * ci + q]) *
                     W.data[(static_cast<size_t>(k) * ci + q) * co + o];
          }
          out.data[(static_cast<size_t>(i) * n + v) * co + o] = static_cast<T>(acc);
        }
    return push(std::move(out), [this, x, theta, dilation, pad, t, n, ci, K, co, t_out](int id) {
      const Ten& G = nodes_[id].grad;
      const Ten& X2 = nodes_[x].value;
      const Ten& W2 = nodes_[theta].value;
      auto& dX = nodes_[x].grad.data;
      auto& dW = nodes_[theta].grad.data;
      for (int i = 0; i < t_out; ++i)
        for (int k = 0; k < K; ++k) {
          int ti = i + dilation * k - pad;
          if (ti < 0 || ti >= t) continue;
          for (int v = 0; v < n; ++v)
            for (int q = 0; q < ci; ++q) {
              double acc_x = 0;
              for (int o = 0; o < co; ++o)
                acc_x += static_cast<double>(
                             G.data[(static_cast<size_t>(i) * n + v) * co + o]) *
                         W2.data[(static_cast<size_t>(k) * ci + q) * co + o];
              dX[(static_cast<size_t>(ti) * n + v) * ci + q] += static_cast<T>(acc_x);
            }
          for (int q = 0; q < ci; ++q)
            for (int o = 0; o < co; ++o) {
              double acc_w = 0;
              for (int v = 0; v < n; ++v)
                acc_w += static_cast<double>(
                             X2.data[(static_cast<size_t>(ti) * n + v) * ci + q]) *
                         G.data[(static_cast<size_t>(i) * n + v) * co + o];
              dW[(static_cast<size_t>(k) * ci + q) * co + o] += static_cast<T>(acc_w);
            }
        }
    });
  }

  int slice_time(int x, int index) {
    const Ten& X = nodes_[x].value;
    if (X.rank() != 3 || index < 0 || index >= X.dim(0))
      throw ShapeMismatch("slice_time index out of range");
    int n = X.dim(1), c = X.dim(2);
    Ten out({n, c});
    size_t off = static_cast<size_t>(index) * n * c;
    std::copy(X.data.begin() + off, X.data.begin() + off + out.numel(), out.data.begin());
    return push(std::move(out), [this, x, index, n, c](int id) {
      const Ten& G = nodes_[id].grad;
      size_t off = static_cast<size_t>(index) * n * c;
      for (size_t i = 0; i < G.numel(); ++i) nodes_[x].grad.data[off + i] += G.data[i];
    });
  }

  int stack_time(std::vector<int> ids) {
    if (ids.empty()) throw ShapeMismatch("stack_time of nothing");
    const Ten& first = nodes_[ids[0]].value;
    if (first.rank() != 2) throw ShapeMismatch("stack_time expects matrices");
    int n = first.dim(0), c = first.dim(1);
    Ten out({static_cast<int>(ids.size()), n, c});
    for (size_t i = 0; i < ids.size(); ++i) {
      const Ten& v = nodes_[ids[i]].value;
      if (v.shape != first.shape) throw ShapeMismatch("stack_time shape mismatch");
      std::copy(v.data.begin(), v.data.end(), out.data.begin() + i * v.numel());
    }
    return push(std::move(out), [this, ids = std::move(ids)](int id) {
      const Ten& G = nodes_[id].grad;
      size_t off = 0;
      for (int src : ids) {
        auto& g = nodes_[src].grad.data;
        for (size_t i = 0; i < g.size(); ++i) g[i] += G.data[off + i];
        off += g.size();
      }
    });
  }

  /// Mean negative log-softmax over masked rows; labels index the class axis.
  int cross_entropy(int logits, std::vector<int> labels, std::vector<uint8_t> mask) {
    const Ten& L = nodes_[logits].value;
    if (L.rank() != 2 || labels.size() != static_cast<size_t>(L.dim(0)) ||
        mask.size() != labels.size())
      throw ShapeMismatch("cross_entropy needs [N x C] logits with N labels and N mask bits");
    int N = L.dim(0), C = L.dim(1);
    long M = 0;
    for (size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) {
        if (labels[i] < 0 || labels[i] >= C)
          throw ShapeMismatch("cross_entropy label out of range at row " + std::to_string(i));
        ++M;
      }
    if (M == 0) throw EmptyMask("cross_entropy mask selects nothing");
    double loss = 0;
    for (int i = 0; i < N; ++i) {
      if (!mask[i]) continue;
      double mx = -1e300;
      for (int j = 0; j < C; ++j) mx = std::max(mx, static_cast<double>(L.data[i * C + j]));
      double lse = 0;
      for (int j = 0; j < C; ++j) lse += std::exp(static_cast<double>(L.data[i * C + j]) - mx);
      lse = std::log(lse) + mx;
      loss += lse - static_cast<double>(L.data[i * C + labels[i]]);
    }
    Ten out({1});
    out.data[0] = static_cast<T>(loss / M);
    return push(std::move(out),
                [this, logits, N, C, M, labels = std::move(labels), mask = std::move(mask)](int id) {
                  const Ten& G = nodes_[id].grad;
                  const Ten& L2 = nodes_[logits].value;
                  T g = G.data[0];
                  for (int i = 0; i < N; ++i) {
                    if (!mask[i]) continue;
                    double mx = -1e300;
                    for (int j = 0; j < C; ++j)
                      mx = std::max(mx, static_cast<double>(L2.data[i * C + j]));
                    double denom = 0;
                    for (int j = 0; j < C; ++j)
                      denom += std::exp(static_cast<double>(L2.data[i * C + j]) - mx);
                    for (int j = 0; j < C; ++j) {
                      double p = std::exp(static_cast<double>(L2.data[i * C + j]) - mx) / denom;
                      double delta = j == labels[i] ? 1.0 : 0.0;
                      nodes_[logits].grad.data[i * C + j] +=
                          static_cast<T>(g * (p - delta) / M);
                    }
                  }
                });
  }

  /// Seed the scalar node's gradient with 1 and run the tape backwards.
  void backward(int id) {
    if (nodes_[id].value.numel() != 1)
      throw ShapeMismatch("backward must start from a scalar");
    for (auto& n : nodes_) std::fill(n.grad.data.begin(), n.grad.data.end(), T(0));
    nodes_[id].grad.data[0] = T(1);
    for (int i = id; i >= 0; --i)
      if (nodes_[i].back) nodes_[i].back(i);
  }

 private:
  struct Node {
    Ten value;
    Ten grad;
    std::function<void(int)> back;
  };
  std::vector<Node> nodes_;

  int push(Ten v, std::function<void(int)> back) {
    Node n;
    n.grad = Ten(v.shape);
    n.value = std::move(v);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  void same_shape(int a, int b, const char* what) {
    if (nodes_[a].value.shape != nodes_[b].value.shape)
      throw ShapeMismatch(std::string(what) + " shape mismatch " +
                          detail::shape_str(nodes_[a].value.shape) + " vs " +
                          detail::shape_str(nodes_[b].value.shape));
  }

  int binary(int a, int b, const char* what, int sa, int sb) {
    same_shape(a, b, what);
    Ten out = nodes_[a].value;
    for (size_t i = 0; i < out.numel(); ++i)
      out.data[i] = out.data[i] * T(sa) + nodes_[b].value.data[i] * T(sb);
    return push(std::move(out), [this, a, b, sa, sb](int id) {
      const Ten& G = nodes_[id].grad;
      for (size_t i = 0; i < G.numel(); ++i) {
        nodes_[a].grad.data[i] += G.data[i] * T(sa);
        nodes_[b].grad.data[i] += G.data[i] * T(sb);
      }
    });
  }
};

using Tape = TapeT<float>;

// --- graph layers (Eq 1-5) ---

/// Symmetric-style normalization constants: c_ji = sqrt(deg(i)+1) *
/// sqrt(deg(j)+1) with deg = in-degree, and c_ii = deg(i)+1 for the
/// implicit self-loop.
template <typename T>
struct GcnCoeffs {
  std::vector<T> edge;  // 1 / c_ji per edge
  std::vector<T> self;  // 1 / c_ii per node
};

template <typename T>
GcnCoeffs<T> gcn_coeffs(const GraphIndex& g) {
  std::vector<int> deg = g.in_degree();
  GcnCoeffs<T> c;
  c.edge.resize(g.num_edges());
  c.self.resize(g.n);
  for (size_t e = 0; e < g.num_edges(); ++e)
    c.edge[e] = static_cast<T>(
        1.0 / (std::sqrt(static_cast<double>(deg[g.dst[e]]) + 1.0) *
               std::sqrt(static_cast<double>(deg[g.src[e]]) + 1.0)));
  for (int i = 0; i < g.n; ++i) c.self[i] = static_cast<T>(1.0 / (deg[i] + 1.0));
  return c;
}

/// Graph convolution: x'_i = relu(Theta^T sum over j in N(i) and i of
/// (s_ji / c_ji) x_j), with edge scalars s_ji = y_ji Theta_e and s_ii = 1.
/// x: [n x in], y: [E x c], theta: [in x out], theta_e: [c x 1].
template <typename T>
int gcn_forward(TapeT<T>& tape, const GraphIndex& g, int y, int x, int theta, int theta_e,
                bool activation = true) {
  if (tape.val(x).dim(0) != g.n) throw ShapeMismatch("gcn_forward node count mismatch");
  if (tape.val(y).dim(0) != static_cast<int>(g.num_edges()))
    throw ShapeMismatch("gcn_forward edge count mismatch");
  GcnCoeffs<T> coeff = gcn_coeffs<T>(g);
  int self = tape.row_scale_const(x, coeff.self);
  int agg;
  if (g.num_edges() > 0) {
    int s = tape.matmul(y, theta_e);                         // [E x 1]
    int xj = tape.gather_rows(x, g.src);                     // [E x in]
    int msg = tape.mul_col(xj, s);
    msg = tape.row_scale_const(msg, coeff.edge);
    agg = tape.scatter_add_rows(msg, g.dst, g.n);
    agg = tape.add(agg, self);
  } else {
    agg = self;
  }
  int pre = tape.matmul(agg, theta);
  return activation ? tape.relu(pre) : pre;
}

template <typename T>
struct GatParamIds {
  int theta;    // [in x out]
  int theta_e;  // [c x e_dim]
  int a_s;      // [out x 1]
  int a_t;      // [out x 1]
  int a_e;      // [e_dim x 1]
};

/// Graph attention: scores a_s.(Theta x_i) + a_t.(Theta x_j) + a_e.e_ij with
/// e_ij = y_ij Theta_e, LeakyReLU then softmax over N(i) plus the self-loop
/// (whose edge vector is zero); x'_i = relu(sum_j alpha_ij Theta x_j).
/// Returns the output id; if alpha_out is non-null it receives the id of the
/// attention column aligned to edges ++ self-loops.
template <typename T>
int gat_forward(TapeT<T>& tape, const GraphIndex& g, int y, int x, const GatParamIds<T>& p,
                T slope, bool activation = true, int* alpha_out = nullptr) {
  if (tape.val(x).dim(0) != g.n) throw ShapeMismatch("gat_forward node count mismatch");
  int H = tape.matmul(x, p.theta);      // [n x out]
  int A = tape.matmul(H, p.a_s);        // [n x 1]
  int B = tape.matmul(H, p.a_t);        // [n x 1]
  int self_score = tape.add(A, B);      // a_e . 0 = 0
  std::vector<int> seg;
  int scores, msgs;
  if (g.num_edges() > 0) {
    int e = tape.matmul(y, p.theta_e);  // [E x e_dim]
    int C = tape.matmul(e, p.a_e);      // [E x 1]
    int edge_score = tape.add(tape.add(tape.gather_rows(A, g.dst), tape.gather_rows(B, g.src)), C);
    scores = tape.concat_rows({edge_score, self_score});
    msgs = tape.concat_rows({tape.gather_rows(H, g.src), H});
    seg = g.dst;
  } else {
    scores = self_score;
    msgs = H;
  }
  for (int i = 0; i < g.n; ++i) seg.push_back(i);
  int act = tape.leaky_relu(scores, slope);
  int alpha = tape.segment_softmax(act, seg, g.n);
  if (alpha_out) *alpha_out = alpha;
  int weighted = tape.mul_col(msgs, alpha);
  int pre = tape.scatter_add_rows(weighted, seg, g.n);
  return activation ? tape.relu(pre) : pre;
}

// --- temporal layers (Eq 6 and the multi-scale block) ---

template <typename T>
struct AsppParamIds {
  int conv1;               // [1 x in x branch]
  std::vector<int> convs;  // [2 x in x branch], one per dilation
  int out_conv;            // [1 x branch*(1+len) x out]
};

/// Four parallel branches: a 1x1 convolution plus one causal 2x1 convolution
/// per dilation rate; channel-concatenated, then projected by a 1x1 output
/// convolution. Entirely linear and time-preserving.
template <typename T>
int aspp_forward(TapeT<T>& tape, int x, const AsppParamIds<T>& p,
                 const std::vector<int>& dilations) {
  if (dilations.size() != p.convs.size())
    throw ShapeMismatch("aspp_forward needs one kernel per dilation");
  std::vector<int> branches;
  branches.push_back(tape.temporal_conv(x, p.conv1, 1, false));
  for (size_t i = 0; i < dilations.size(); ++i)
    branches.push_back(tape.temporal_conv(x, p.convs[i], dilations[i], true));
  int cat = tape.concat_last(branches);
  return tape.temporal_conv(cat, p.out_conv, 1, false);
}

// --- checkpoints ---

void save_checkpoint(const std::map<std::string, Tensor>& params, const std::string& dir);
std::map<std::string, Tensor> load_checkpoint(const std::string& dir);

}  // namespace seupred
