// src/ops.cc

// Copyright 2026  The nar-asr Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "narasr/ops.h"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "narasr/errors.h"

namespace narasr {

namespace {

using internal::TensorNode;
using BackwardFn = std::function<void(TensorNode&)>;

void CheckFinite(const std::vector<double>& data, const char* op) {
  for (double v : data) {
    if (!std::isfinite(v)) {
      throw NumericFault(std::string("non-finite value produced by ") + op);
    }
  }
}

// Wraps freshly computed output data into a tensor, attaching lineage when
// grad mode is on and some input requires grad.
Tensor MakeResult(const char* op, Shape shape, std::vector<double> data,
                  std::initializer_list<const Tensor*> inputs,
                  BackwardFn backward) {
  CheckFinite(data, op);
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  bool needs = false;
  if (GradMode::enabled()) {
    for (const Tensor* t : inputs) needs = needs || t->requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    for (const Tensor* t : inputs) node->parents.push_back(t->node_ptr());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void RequireRank(const Tensor& t, int rank, const char* op) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor");
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " +
                         std::to_string(rank) + ", got " +
                         ShapeToString(t.shape()));
  }
}

void RequireSameShape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         ShapeToString(a.shape()) + " vs " +
                         ShapeToString(b.shape()));
  }
}

double StableSigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor Matmul(const Tensor& a, const Tensor& b) {
  RequireRank(a, 2, "matmul");
  RequireRank(b, 2, "matmul");
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions differ, " +
                         ShapeToString(a.shape()) + " x " +
                         ShapeToString(b.shape()));
  }
  std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
  if (m > 0 && n > 0 && k > 0) {
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, n, k, 1.0,
                a.data().data(), k, b.data().data(), n, 0.0, out.data(), n);
  }
  return MakeResult("matmul", {m, n}, std::move(out), {&a, &b},
                    [m, k, n](TensorNode& self) {
    if (m == 0 || n == 0 || k == 0) return;
    TensorNode& na = *self.parents[0];
    TensorNode& nb = *self.parents[1];
    const double* g = self.grad.data();
    if (na.requires_grad) {  // dA += G * B^T
      cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, m, k, n, 1.0, g, n,
                  nb.data.data(), n, 1.0, na.GradBuffer(), k);
    }
    if (nb.requires_grad) {  // dB += A^T * G
      cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, k, n, m, 1.0,
                  na.data.data(), k, g, n, 1.0, nb.GradBuffer(), n);
    }
  });
}

Tensor Transpose(const Tensor& x) {
  RequireRank(x, 2, "transpose");
  const int r = x.dim(0), c = x.dim(1);
  std::vector<double> out(x.size());
  const double* px = x.data().data();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      out[static_cast<size_t>(j) * r + i] = px[static_cast<size_t>(i) * c + j];
  return MakeResult("transpose", {c, r}, std::move(out), {&x},
                    [r, c](TensorNode& self) {
    double* gx = self.parents[0]->GradBuffer();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j)
        gx[static_cast<size_t>(i) * c + j] +=
            self.grad[static_cast<size_t>(j) * r + i];
  });
}

Tensor Add(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "add");
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return MakeResult("add", a.shape(), std::move(out), {&a, &b},
                    [](TensorNode& self) {
    for (auto& parent : self.parents) {
      if (!parent->requires_grad) continue;
      double* g = parent->GradBuffer();
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "mul");
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return MakeResult("mul", a.shape(), std::move(out), {&a, &b},
                    [](TensorNode& self) {
    TensorNode& na = *self.parents[0];
    TensorNode& nb = *self.parents[1];
    if (na.requires_grad) {
      double* g = na.GradBuffer();
      for (size_t i = 0; i < self.grad.size(); ++i)
        g[i] += self.grad[i] * nb.data[i];
    }
    if (nb.requires_grad) {
      double* g = nb.GradBuffer();
      for (size_t i = 0; i < self.grad.size(); ++i)
        g[i] += self.grad[i] * na.data[i];
    }
  });
}

Tensor Scale(const Tensor& x, double factor) {
  std::vector<double> out(x.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * factor;
  return MakeResult("scale", x.shape(), std::move(out), {&x},
                    [factor](TensorNode& self) {
    double* g = self.parents[0]->GradBuffer();
    for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * factor;
  });
}

Tensor AddBias(const Tensor& x, const Tensor& bias) {
  RequireRank(bias, 1, "add_bias");
  if (x.rank() < 1 || x.shape().back() != bias.dim(0)) {
    throw DimensionError("add_bias: bias " + ShapeToString(bias.shape()) +
                         " does not match " + ShapeToString(x.shape()));
  }
  const size_t n = bias.size();
  std::vector<double> out(x.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] + bias.data()[i % n];
  return MakeResult("add_bias", x.shape(), std::move(out), {&x, &bias},
                    [n](TensorNode& self) {
    TensorNode& nx = *self.parents[0];
    TensorNode& nb = *self.parents[1];
    if (nx.requires_grad) {
      double* g = nx.GradBuffer();
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (nb.requires_grad) {
      double* g = nb.GradBuffer();
      for (size_t i = 0; i < self.grad.size(); ++i) g[i % n] += self.grad[i];
    }
  });
}

Tensor Relu(const Tensor& x) {
  std::vector<double> out(x.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, x.data()[i]);
  return MakeResult("relu", x.shape(), std::move(out), {&x},
                    [](TensorNode& self) {
    TensorNode& nx = *self.parents[0];
    double* g = nx.GradBuffer();
    for (size_t i = 0; i < self.grad.size(); ++i)
      if (nx.data[i] > 0.0) g[i] += self.grad[i];
  });
}

Tensor Sigmoid(const Tensor& x) {
  std::vector<double> out(x.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = StableSigmoid(x.data()[i]);
  return MakeResult("sigmoid", x.shape(), out, {&x},
                    [out](TensorNode& self) {
    double* g = self.parents[0]->GradBuffer();
    for (size_t i = 0; i < self.grad.size(); ++i)
      g[i] += self.grad[i] * out[i] * (1.0 - out[i]);
  });
}

Tensor Glu(const Tensor& x) {
  if (x.rank() < 1 || x.shape().back() % 2 != 0) {
    throw DimensionError("glu: last dimension must be even, got " +
                         ShapeToString(x.shape()));
  }
  const int two_d = x.shape().back();
  const int d = two_d / 2;
  const size_t rows = x.size() / two_d;
  Shape out_shape = x.shape();
  out_shape.back() = d;
  std::vector<double> out(rows * d);
  std::vector<double> gate(rows * d);
  const double* px = x.data().data();
  for (size_t r = 0; r < rows; ++r) {
    for (int j = 0; j < d; ++j) {
      const double s = StableSigmoid(px[r * two_d + d + j]);
      gate[r * d + j] = s;
      out[r * d + j] = px[r * two_d + j] * s;
    }
  }
  return MakeResult("glu", out_shape, std::move(out), {&x},
                    [rows, d, two_d, gate = std::move(gate)](TensorNode& self) {
    TensorNode& nx = *self.parents[0];
    double* g = nx.GradBuffer();
    for (size_t r = 0; r < rows; ++r) {
      for (int j = 0; j < d; ++j) {
        const double s = gate[r * d + j];
        const double gy = self.grad[r * d + j];
        const double a = nx.data[r * two_d + j];
        g[r * two_d + j] += gy * s;
        g[r * two_d + d + j] += gy * a * s * (1.0 - s);
      }
    }
  });
}

Tensor Softmax(const Tensor& x, int axis) {
  if (!x.defined() || axis < 0 || axis >= x.rank()) {
    throw DimensionError("softmax: invalid axis " + std::to_string(axis) +
                         " for " + (x.defined() ? ShapeToString(x.shape())
                                                 : std::string("undefined")));
  }
  size_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= x.shape()[i];
  for (int i = axis + 1; i < x.rank(); ++i) inner *= x.shape()[i];
  const size_t n = x.shape()[axis];
  std::vector<double> out(x.size());
  const double* px = x.data().data();
  for (size_t o = 0; o < outer; ++o) {
    for (size_t in = 0; in < inner; ++in) {
      const size_t base = o * n * inner + in;
      double mx = px[base];
      for (size_t k = 1; k < n; ++k) mx = std::max(mx, px[base + k * inner]);
      double total = 0.0;
      for (size_t k = 0; k < n; ++k) {
        const double e = std::exp(px[base + k * inner] - mx);
        out[base + k * inner] = e;
        total += e;
      }
      for (size_t k = 0; k < n; ++k) out[base + k * inner] /= total;
    }
  }
  return MakeResult("softmax", x.shape(), out, {&x},
                    [outer, inner, n, out](TensorNode& self) {
    double* g = self.parents[0]->GradBuffer();
    for (size_t o = 0; o < outer; ++o) {
      for (size_t in = 0; in < inner; ++in) {
        const size_t base = o * n * inner + in;
        double dot = 0.0;
        for (size_t k = 0; k < n; ++k)
          dot += self.grad[base + k * inner] * out[base + k * inner];
        for (size_t k = 0; k < n; ++k) {
          const size_t idx = base + k * inner;
          g[idx] += out[idx] * (self.grad[idx] - dot);
        }
      }
    }
  });
}

Tensor LayerNorm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                 double eps) {
  if (x.rank() < 1) throw DimensionError("layer_norm: scalar input");
  const int n = x.shape().back();
  if (gain.rank() != 1 || bias.rank() != 1 || gain.dim(0) != n ||
      bias.dim(0) != n) {
    throw DimensionError("layer_norm: gain " + ShapeToString(gain.shape()) +
                         " / bias " + ShapeToString(bias.shape()) +
                         " do not match last dimension of " +
                         ShapeToString(x.shape()));
  }
  const size_t rows = x.size() / n;
  std::vector<double> xhat(x.size());
  std::vector<double> rstd(rows);
  std::vector<double> out(x.size());
  const double* px = x.data().data();
  const double* pg = gain.data().data();
  const double* pb = bias.data().data();
  for (size_t r = 0; r < rows; ++r) {
    const double* row = px + r * n;
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += row[j];
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= n;
    const double rs = 1.0 / std::sqrt(var + eps);
    rstd[r] = rs;
    for (int j = 0; j < n; ++j) {
      const double h = (row[j] - mean) * rs;
      xhat[r * n + j] = h;
      out[r * n + j] = h * pg[j] + pb[j];
    }
  }
  return MakeResult("layer_norm", x.shape(), std::move(out), {&x, &gain, &bias},
                    [rows, n, xhat = std::move(xhat),
                     rstd = std::move(rstd)](TensorNode& self) {
    TensorNode& nx = *self.parents[0];
    TensorNode& ng = *self.parents[1];
    TensorNode& nb = *self.parents[2];
    if (ng.requires_grad) {
      double* g = ng.GradBuffer();
      for (size_t r = 0; r < rows; ++r)
        for (int j = 0; j < n; ++j)
          g[j] += self.grad[r * n + j] * xhat[r * n + j];
    }
    if (nb.requires_grad) {
      double* g = nb.GradBuffer();
      for (size_t r = 0; r < rows; ++r)
        for (int j = 0; j < n; ++j) g[j] += self.grad[r * n + j];
    }
    if (nx.requires_grad) {
      double* g = nx.GradBuffer();
      for (size_t r = 0; r < rows; ++r) {
        double mean_d = 0.0, mean_dx = 0.0;
        for (int j = 0; j < n; ++j) {
          const double d = self.grad[r * n + j] * ng.data[j];
          mean_d += d;
          mean_dx += d * xhat[r * n + j];
        }
        mean_d /= n;
        mean_dx /= n;
        for (int j = 0; j < n; ++j) {
          const double d = self.grad[r * n + j] * ng.data[j];
          g[r * n + j] += rstd[r] * (d - mean_d - xhat[r * n + j] * mean_dx);
        }
      }
    }
  });
}

Tensor Conv2d(const Tensor& input, const Tensor& filters, const Tensor& bias,
              int stride) {
  RequireRank(input, 3, "conv2d");
  RequireRank(filters, 4, "conv2d");
  const int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int cout = filters.dim(0), k = filters.dim(2);
  if (cin == 0 || h == 0 || w == 0) {
    throw DimensionError("conv2d: zero-size input " +
                         ShapeToString(input.shape()));
  }
  if (filters.dim(1) != cin || filters.dim(3) != k || k % 2 == 0) {
    throw DimensionError("conv2d: filters " + ShapeToString(filters.shape()) +
                         " incompatible with input " +
                         ShapeToString(input.shape()) +
                         " (square odd kernel required)");
  }
  if (stride < 1) throw DimensionError("conv2d: stride must be positive");
  const int pad = (k - 1) / 2;
  if (h + 2 * pad < k || w + 2 * pad < k) {
    throw DimensionError("conv2d: kernel larger than padded input");
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != cout)) {
    throw DimensionError("conv2d: bias " + ShapeToString(bias.shape()) +
                         " does not match " + std::to_string(cout) +
                         " output channels");
  }
  const int ho = (h + stride - 1) / stride;
  const int wo = (w + stride - 1) / stride;
  std::vector<double> out(static_cast<size_t>(cout) * ho * wo, 0.0);
  const double* px = input.data().data();
  const double* pf = filters.data().data();
  for (int co = 0; co < cout; ++co) {
    double* oplane = out.data() + static_cast<size_t>(co) * ho * wo;
    if (bias.defined()) std::fill(oplane, oplane + ho * wo, bias.data()[co]);
    for (int ci = 0; ci < cin; ++ci) {
      const double* iplane = px + static_cast<size_t>(ci) * h * w;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double wv = pf[((static_cast<size_t>(co) * cin + ci) * k + ky) * k + kx];
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) continue;
            const double* irow = iplane + static_cast<size_t>(iy) * w;
            double* orow = oplane + static_cast<size_t>(oy) * wo;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= w) continue;
              orow[ox] += wv * irow[ix];
            }
          }
        }
      }
    }
  }
  const bool has_bias = bias.defined();
  BackwardFn backward = [=](TensorNode& self) {
        TensorNode& ni = *self.parents[0];
        TensorNode& nf = *self.parents[1];
        const double* g = self.grad.data();
        double* gi = ni.requires_grad ? ni.GradBuffer() : nullptr;
        double* gf = nf.requires_grad ? nf.GradBuffer() : nullptr;
        for (int co = 0; co < cout; ++co) {
          const double* gplane = g + static_cast<size_t>(co) * ho * wo;
          for (int ci = 0; ci < cin; ++ci) {
            const size_t ibase = static_cast<size_t>(ci) * h * w;
            for (int ky = 0; ky < k; ++ky) {
              for (int kx = 0; kx < k; ++kx) {
                const size_t fidx = ((static_cast<size_t>(co) * cin + ci) * k + ky) * k + kx;
                const double wv = nf.data[fidx];
                double gw = 0.0;
                for (int oy = 0; oy < ho; ++oy) {
                  const int iy = oy * stride - pad + ky;
                  if (iy < 0 || iy >= h) continue;
                  for (int ox = 0; ox < wo; ++ox) {
                    const int ix = ox * stride - pad + kx;
                    if (ix < 0 || ix >= w) continue;
                    const double gv = gplane[static_cast<size_t>(oy) * wo + ox];
                    const size_t iidx = ibase + static_cast<size_t>(iy) * w + ix;
                    gw += gv * ni.data[iidx];
                    if (gi) gi[iidx] += gv * wv;
                  }
                }
                if (gf) gf[fidx] += gw;
              }
            }
          }
        }
        if (has_bias && self.parents[2]->requires_grad) {
          double* gb = self.parents[2]->GradBuffer();
          for (int co = 0; co < cout; ++co) {
            const double* gplane = g + static_cast<size_t>(co) * ho * wo;
            double acc = 0.0;
            for (int i = 0; i < ho * wo; ++i) acc += gplane[i];
            gb[co] += acc;
          }
        }
      };
  if (has_bias) {
    return MakeResult("conv2d", {cout, ho, wo}, std::move(out),
                      {&input, &filters, &bias}, std::move(backward));
  }
  return MakeResult("conv2d", {cout, ho, wo}, std::move(out),
                    {&input, &filters}, std::move(backward));
}

Tensor EmbeddingLookup(const Tensor& table, std::span<const int> indices) {
  RequireRank(table, 2, "embedding_lookup");
  const int vocab = table.dim(0), d = table.dim(1);
  std::vector<int> idx(indices.begin(), indices.end());
  std::vector<double> out(idx.size() * d);
  for (size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= vocab) {
      throw IndexError("embedding_lookup: index " + std::to_string(idx[r]) +
                       " outside [0, " + std::to_string(vocab) + ")");
    }
    std::copy_n(table.data().data() + static_cast<size_t>(idx[r]) * d, d,
                out.data() + r * d);
  }
  const int len = static_cast<int>(idx.size());
  return MakeResult("embedding_lookup", {len, d}, std::move(out), {&table},
                    [d, idx = std::move(idx)](TensorNode& self) {
    double* g = self.parents[0]->GradBuffer();
    for (size_t r = 0; r < idx.size(); ++r)
      for (int j = 0; j < d; ++j)
        g[static_cast<size_t>(idx[r]) * d + j] += self.grad[r * d + j];
  });
}

Tensor Dropout(const Tensor& x, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ContractError("dropout: rate must be in [0, 1), got " +
                        std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.size());
  std::vector<double> out(x.size());
  for (size_t i = 0; i < out.size(); ++i) {
    mask[i] = rng.Uniform() >= rate ? keep_scale : 0.0;
    out[i] = x.data()[i] * mask[i];
  }
  return MakeResult("dropout", x.shape(), std::move(out), {&x},
                    [mask = std::move(mask)](TensorNode& self) {
    double* g = self.parents[0]->GradBuffer();
    for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * mask[i];
  });
}

Tensor LabelSmoothedNll(const Tensor& logits, std::span<const int> targets,
                        double smoothing,
                        std::span<const uint8_t> position_mask) {
  RequireRank(logits, 2, "label_smoothed_nll");
  const int len = logits.dim(0), vocab = logits.dim(1);
  if (static_cast<int>(targets.size()) != len) {
    throw DimensionError("label_smoothed_nll: " + std::to_string(targets.size()) +
                         " targets for " + std::to_string(len) + " positions");
  }
  if (vocab < 2) throw DimensionError("label_smoothed_nll: vocabulary below 2");
  if (smoothing < 0.0 || smoothing >= 1.0) {
    throw ContractError("label_smoothed_nll: smoothing must be in [0, 1)");
  }
  if (!position_mask.empty() && static_cast<int>(position_mask.size()) != len) {
    throw DimensionError("label_smoothed_nll: position mask length mismatch");
  }
  const double off = smoothing / (vocab - 1);
  const double on = 1.0 - smoothing;
  std::vector<double> probs(logits.size());
  std::vector<int> tgt(targets.begin(), targets.end());
  std::vector<uint8_t> active(len, 1);
  if (!position_mask.empty()) {
    for (int i = 0; i < len; ++i) active[i] = position_mask[i] != 0;
  }
  int count = 0;
  double total = 0.0;
  const double* px = logits.data().data();
  for (int i = 0; i < len; ++i) {
    if (tgt[i] < 0 || tgt[i] >= vocab) {
      throw IndexError("label_smoothed_nll: target " + std::to_string(tgt[i]) +
                       " outside [0, " + std::to_string(vocab) + ")");
    }
    const double* row = px + static_cast<size_t>(i) * vocab;
    double mx = row[0];
    for (int v = 1; v < vocab; ++v) mx = std::max(mx, row[v]);
    double z = 0.0;
    for (int v = 0; v < vocab; ++v) z += std::exp(row[v] - mx);
    const double log_z = mx + std::log(z);
    double* prow = probs.data() + static_cast<size_t>(i) * vocab;
    double loss = 0.0;
    for (int v = 0; v < vocab; ++v) {
      const double log_p = row[v] - log_z;
      prow[v] = std::exp(log_p);
      loss -= (v == tgt[i] ? on : off) * log_p;
    }
    if (active[i]) {
      total += loss;
      ++count;
    }
  }
  if (count == 0) {
    throw ContractError("label_smoothed_nll: no active positions");
  }
  return MakeResult(
      "label_smoothed_nll", {}, {total / count}, {&logits},
      [=, probs = std::move(probs), tgt = std::move(tgt),
       active = std::move(active)](TensorNode& self) {
        double* g = self.parents[0]->GradBuffer();
        const double scale = self.grad[0] / count;
        for (int i = 0; i < len; ++i) {
          if (!active[i]) continue;
          for (int v = 0; v < vocab; ++v) {
            const size_t idx = static_cast<size_t>(i) * vocab + v;
            g[idx] += scale * (probs[idx] - (v == tgt[i] ? on : off));
          }
        }
      });
}

Tensor Sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return MakeResult("sum", {}, {total}, {&x}, [](TensorNode& self) {
    TensorNode& nx = *self.parents[0];
    double* g = nx.GradBuffer();
    for (size_t i = 0; i < nx.data.size(); ++i) g[i] += self.grad[0];
  });
}

Tensor Mean(const Tensor& x) {
  if (x.size() == 0) throw ContractError("mean of empty tensor");
  return Scale(Sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor Reshape(const Tensor& x, const Shape& shape) {
  if (ShapeNumel(shape) != x.size()) {
    throw DimensionError("reshape: " + ShapeToString(x.shape()) + " to " +
                         ShapeToString(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return MakeResult("reshape", shape, std::move(out), {&x},
                    [](TensorNode& self) {
    double* g = self.parents[0]->GradBuffer();
    for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor SliceRows(const Tensor& x, int begin, int end) {
  RequireRank(x, 2, "slice_rows");
  if (begin < 0 || end > x.dim(0) || begin > end) {
    throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") of " +
                         ShapeToString(x.shape()));
  }
  const int c = x.dim(1);
  const size_t offset = static_cast<size_t>(begin) * c;
  std::vector<double> out(x.data().begin() + offset,
                          x.data().begin() + static_cast<size_t>(end) * c);
  return MakeResult("slice_rows", {end - begin, c}, std::move(out), {&x},
                    [offset](TensorNode& self) {
    double* g = self.parents[0]->GradBuffer() + offset;
    for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor SliceCols(const Tensor& x, int begin, int end) {
  RequireRank(x, 2, "slice_cols");
  if (begin < 0 || end > x.dim(1) || begin > end) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") of " +
                         ShapeToString(x.shape()));
  }
  const int r = x.dim(0), c = x.dim(1), w = end - begin;
  std::vector<double> out(static_cast<size_t>(r) * w);
  for (int i = 0; i < r; ++i)
    std::copy_n(x.data().data() + static_cast<size_t>(i) * c + begin, w,
                out.data() + static_cast<size_t>(i) * w);
  return MakeResult("slice_cols", {r, w}, std::move(out), {&x},
                    [r, c, w, begin](TensorNode& self) {
    double* g = self.parents[0]->GradBuffer();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < w; ++j)
        g[static_cast<size_t>(i) * c + begin + j] +=
            self.grad[static_cast<size_t>(i) * w + j];
  });
}

namespace {

// Shared implementation for the two concatenations; parents are attached
// manually because the input count is dynamic.
Tensor ConcatImpl(const std::vector<Tensor>& parts, bool by_cols) {
  const char* op = by_cols ? "concat_cols" : "concat_rows";
  if (parts.empty()) throw DimensionError(std::string(op) + ": no inputs");
  const int fixed = by_cols ? parts[0].dim(0) : parts[0].dim(1);
  int total = 0;
  std::vector<int> extents;
  for (const Tensor& t : parts) {
    RequireRank(t, 2, op);
    if ((by_cols ? t.dim(0) : t.dim(1)) != fixed) {
      throw DimensionError(std::string(op) + ": mismatched " +
                           ShapeToString(t.shape()));
    }
    extents.push_back(by_cols ? t.dim(1) : t.dim(0));
    total += extents.back();
  }
  const int rows = by_cols ? fixed : total;
  const int cols = by_cols ? total : fixed;
  std::vector<double> out(static_cast<size_t>(rows) * cols);
  int offset = 0;
  for (size_t p = 0; p < parts.size(); ++p) {
    const double* src = parts[p].data().data();
    if (by_cols) {
      for (int i = 0; i < rows; ++i)
        std::copy_n(src + static_cast<size_t>(i) * extents[p], extents[p],
                    out.data() + static_cast<size_t>(i) * cols + offset);
    } else {
      std::copy_n(src, parts[p].size(),
                  out.data() + static_cast<size_t>(offset) * cols);
    }
    offset += extents[p];
  }
  CheckFinite(out, op);
  auto node = std::make_shared<TensorNode>();
  node->shape = {rows, cols};
  node->data = std::move(out);
  node->op = op;
  bool needs = false;
  if (GradMode::enabled()) {
    for (const Tensor& t : parts) needs = needs || t.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    for (const Tensor& t : parts) node->parents.push_back(t.node_ptr());
    node->backward = [rows, cols, by_cols, extents](TensorNode& self) {
      int off = 0;
      for (size_t p = 0; p < self.parents.size(); ++p) {
        TensorNode& np = *self.parents[p];
        if (np.requires_grad) {
          double* g = np.GradBuffer();
          if (by_cols) {
            for (int i = 0; i < rows; ++i)
              for (int j = 0; j < extents[p]; ++j)
                g[static_cast<size_t>(i) * extents[p] + j] +=
                    self.grad[static_cast<size_t>(i) * cols + off + j];
          } else {
            const size_t base = static_cast<size_t>(off) * cols;
            for (size_t i = 0; i < np.data.size(); ++i)
              g[i] += self.grad[base + i];
          }
        }
        off += extents[p];
      }
    };
  }
  return Tensor(std::move(node));
}

}  // namespace

Tensor ConcatCols(const std::vector<Tensor>& parts) {
  return ConcatImpl(parts, true);
}

Tensor ConcatRows(const std::vector<Tensor>& parts) {
  return ConcatImpl(parts, false);
}

Tensor SwapLeadingAxes(const Tensor& x) {
  RequireRank(x, 3, "swap_leading_axes");
  const int a = x.dim(0), b = x.dim(1), c = x.dim(2);
  std::vector<double> out(x.size());
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < b; ++j)
      std::copy_n(x.data().data() + (static_cast<size_t>(i) * b + j) * c, c,
                  out.data() + (static_cast<size_t>(j) * a + i) * c);
  return MakeResult("swap_leading_axes", {b, a, c}, std::move(out), {&x},
                    [a, b, c](TensorNode& self) {
    double* g = self.parents[0]->GradBuffer();
    for (int i = 0; i < a; ++i)
      for (int j = 0; j < b; ++j)
        for (int k = 0; k < c; ++k)
          g[(static_cast<size_t>(i) * b + j) * c + k] +=
              self.grad[(static_cast<size_t>(j) * a + i) * c + k];
  });
}

Tensor MaskedFill(const Tensor& x, std::span<const uint8_t> keep,
                  double value) {
  if (keep.size() != x.size()) {
    throw DimensionError("masked_fill: mask has " + std::to_string(keep.size()) +
                         " entries for " + ShapeToString(x.shape()));
  }
  std::vector<uint8_t> mask(keep.begin(), keep.end());
  std::vector<double> out(x.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = mask[i] ? x.data()[i] : value;
  return MakeResult("masked_fill", x.shape(), std::move(out), {&x},
                    [mask = std::move(mask)](TensorNode& self) {
    double* g = self.parents[0]->GradBuffer();
    for (size_t i = 0; i < self.grad.size(); ++i)
      if (mask[i]) g[i] += self.grad[i];
  });
}

}  // namespace narasr
