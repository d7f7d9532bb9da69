// Copyright 2026 The mipp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mipp/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "mipp/error.hpp"

namespace mipp::nn {
namespace {

thread_local bool g_grad_enabled = true;

void accumulate(const Var& parent, std::size_t i, double g) {
  parent.node()->ensure_grad()[i] += g;
}

bool wants_grad(const Var& v) { return v.defined() && v.requires_grad(); }

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    fail(ErrorKind::kDimension, std::string(op) + ": shapes " + shape_string(a.shape()) +
                                    " and " + shape_string(b.shape()) + " differ");
  }
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  require(values_.size() == shape_size(shape_), ErrorKind::kDimension,
          "tensor value count does not match shape " + shape_string(shape_));
}

double Tensor::item() const {
  require(values_.size() == 1, ErrorKind::kDimension,
          "item() on tensor of shape " + shape_string(shape_));
  return values_[0];
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

Tensor Tensor::reshaped(Shape shape) const {
  require(shape_size(shape) == values_.size(), ErrorKind::kDimension,
          "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  return Tensor(std::move(shape), values_);
}

Tensor& Node::ensure_grad() {
  if (grad.size() != value.size() || grad.shape() != value.shape()) {
    grad = Tensor(value.shape(), 0.0);
  }
  return grad;
}

Var Var::leaf(Tensor value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return Var(std::move(node));
}

bool Var::requires_grad() const { return node_ && node_->requires_grad; }

const Tensor& Var::value() const {
  require(defined(), ErrorKind::kUsage, "access to an undefined variable");
  return node_->value;
}

Tensor& Var::mutable_value() {
  require(defined(), ErrorKind::kUsage, "access to an undefined variable");
  return node_->value;
}

const Tensor& Var::grad() const {
  require(defined(), ErrorKind::kUsage, "access to an undefined variable");
  return node_->ensure_grad();
}

Tensor& Var::mutable_grad() {
  require(defined(), ErrorKind::kUsage, "access to an undefined variable");
  return node_->ensure_grad();
}

void Var::zero_grad() {
  if (node_) node_->ensure_grad().fill(0.0);
}

Var make_result(Tensor value, std::vector<Var> parents, std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled &&
      std::any_of(parents.begin(), parents.end(), [](const Var& p) { return wants_grad(p); })) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(fn);
  }
  return Var(std::move(node));
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

void backward(const Var& loss) {
  require(loss.defined(), ErrorKind::kUsage, "backward() called before any forward pass");
  require(loss.requires_grad(), ErrorKind::kUsage,
          "backward() on a value with no recorded differentiable forward pass");
  require(loss.value().size() == 1, ErrorKind::kUsage,
          "backward() needs a scalar loss, got " + shape_string(loss.shape()));

  // Post-order DFS; leaves keep their accumulated gradients, interior nodes
  // restart from zero on every pass.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].node().get();
      if (p && p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node* n : order) {
    if (n->backward) n->ensure_grad().fill(0.0);
  }
  loss.node()->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return make_result(std::move(out), {a, b}, [a, b](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (wants_grad(a)) accumulate(a, i, self.grad[i]);
      if (wants_grad(b)) accumulate(b, i, self.grad[i]);
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return make_result(std::move(out), {a, b}, [a, b](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (wants_grad(a)) accumulate(a, i, self.grad[i]);
      if (wants_grad(b)) accumulate(b, i, -self.grad[i]);
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return make_result(std::move(out), {a, b}, [a, b](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (wants_grad(a)) accumulate(a, i, self.grad[i] * b.value()[i]);
      if (wants_grad(b)) accumulate(b, i, self.grad[i] * a.value()[i]);
    }
  });
}

Var scale(const Var& a, double factor) {
  Tensor out = a.value();
  for (double& v : out.values()) v *= factor;
  return make_result(std::move(out), {a}, [a, factor](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) accumulate(a, i, self.grad[i] * factor);
  });
}

Var square(const Var& a) { return mul(a, a); }

Var log(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = std::log(v);
  return make_result(std::move(out), {a}, [a](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (self.grad[i] != 0.0) accumulate(a, i, self.grad[i] / a.value()[i]);
    }
  });
}

Var relu(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return make_result(std::move(out), {a}, [a](Node& self) {
    Tensor& g = a.node()->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (a.value()[i] > 0.0) g[i] += self.grad[i];
    }
  });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return make_result(Tensor({1}, s), {a}, [a](Node& self) {
    Tensor& g = a.node()->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0];
  });
}

Var mean(const Var& a) {
  require(a.value().size() > 0, ErrorKind::kDimension, "mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var reshape(const Var& a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return make_result(std::move(out), {a}, [a](Node& self) {
    Tensor& g = a.node()->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

namespace {

struct ConvGeometry {
  std::size_t batch, in_c, h, w, out_c, k, out_h, out_w;
  int stride, pad;

  // Output range [lo, hi] for which the input index o * stride + tap - pad
  // stays inside [0, extent).
  std::pair<int, int> valid(int tap, int extent, int out_extent) const {
    int lo = 0;
    while (lo < out_extent && lo * stride + tap - pad < 0) ++lo;
    int hi = out_extent - 1;
    while (hi >= lo && hi * stride + tap - pad >= extent) --hi;
    return {lo, hi};
  }
};

}  // namespace

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int padding) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  require(xs.size() == 4, ErrorKind::kDimension, "conv2d input must be [B, C, H, W], got " +
                                                     shape_string(xs));
  require(ws.size() == 4 && ws[2] == ws[3], ErrorKind::kDimension,
          "conv2d kernel must be [O, C, k, k], got " + shape_string(ws));
  require(ws[1] == xs[1], ErrorKind::kDimension,
          "conv2d kernel expects " + std::to_string(ws[1]) + " channels, input has " +
              std::to_string(xs[1]));
  require(bias.shape() == Shape{ws[0]}, ErrorKind::kDimension, "conv2d bias must be [O]");
  require(stride >= 1 && padding >= 0, ErrorKind::kDimension, "invalid conv2d stride/padding");
  const long padded_h = static_cast<long>(xs[2]) + 2 * padding;
  const long padded_w = static_cast<long>(xs[3]) + 2 * padding;
  require(padded_h >= static_cast<long>(ws[2]) && padded_w >= static_cast<long>(ws[3]),
          ErrorKind::kDimension, "conv2d kernel larger than padded input");

  ConvGeometry g{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2],
                 static_cast<std::size_t>((padded_h - static_cast<long>(ws[2])) / stride + 1),
                 static_cast<std::size_t>((padded_w - static_cast<long>(ws[3])) / stride + 1),
                 stride, padding};

  Tensor out({g.batch, g.out_c, g.out_h, g.out_w});
  const double* xv = x.value().data();
  const double* wv = weight.value().data();
  const double* bv = bias.value().data();
  double* ov = out.data();
  const std::size_t plane = g.out_h * g.out_w;
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t o = 0; o < g.out_c; ++o) {
      double* obo = ov + (b * g.out_c + o) * plane;
      std::fill(obo, obo + plane, bv[o]);
      for (std::size_t c = 0; c < g.in_c; ++c) {
        const double* xbc = xv + (b * g.in_c + c) * g.h * g.w;
        const double* woc = wv + (o * g.in_c + c) * g.k * g.k;
        for (std::size_t ky = 0; ky < g.k; ++ky) {
          auto [oy0, oy1] = g.valid(static_cast<int>(ky), static_cast<int>(g.h),
                                    static_cast<int>(g.out_h));
          for (std::size_t kx = 0; kx < g.k; ++kx) {
            auto [ox0, ox1] = g.valid(static_cast<int>(kx), static_cast<int>(g.w),
                                      static_cast<int>(g.out_w));
            const double wk = woc[ky * g.k + kx];
            for (int oy = oy0; oy <= oy1; ++oy) {
              const double* xrow = xbc + (oy * stride + static_cast<int>(ky) - padding) * g.w;
              double* orow = obo + oy * g.out_w;
              for (int ox = ox0; ox <= ox1; ++ox) {
                orow[ox] += wk * xrow[ox * stride + static_cast<int>(kx) - padding];
              }
            }
          }
        }
      }
    }
  }

  return make_result(std::move(out), {x, weight, bias}, [x, weight, bias, g](Node& self) {
    const double* xv = x.value().data();
    const double* wv = weight.value().data();
    const double* gv = self.grad.data();
    double* gx = wants_grad(x) ? x.node()->ensure_grad().data() : nullptr;
    double* gw = wants_grad(weight) ? weight.node()->ensure_grad().data() : nullptr;
    double* gb = wants_grad(bias) ? bias.node()->ensure_grad().data() : nullptr;
    const std::size_t plane = g.out_h * g.out_w;
    for (std::size_t b = 0; b < g.batch; ++b) {
      for (std::size_t o = 0; o < g.out_c; ++o) {
        const double* gbo = gv + (b * g.out_c + o) * plane;
        if (gb) {
          double s = 0.0;
          for (std::size_t i = 0; i < plane; ++i) s += gbo[i];
          gb[o] += s;
        }
        for (std::size_t c = 0; c < g.in_c; ++c) {
          const std::size_t xoff = (b * g.in_c + c) * g.h * g.w;
          const std::size_t woff = (o * g.in_c + c) * g.k * g.k;
          for (std::size_t ky = 0; ky < g.k; ++ky) {
            auto [oy0, oy1] = g.valid(static_cast<int>(ky), static_cast<int>(g.h),
                                      static_cast<int>(g.out_h));
            for (std::size_t kx = 0; kx < g.k; ++kx) {
              auto [ox0, ox1] = g.valid(static_cast<int>(kx), static_cast<int>(g.w),
                                        static_cast<int>(g.out_w));
              const double wk = wv[woff + ky * g.k + kx];
              double wsum = 0.0;
              for (int oy = oy0; oy <= oy1; ++oy) {
                const std::size_t xrow =
                    xoff + (oy * g.stride + static_cast<int>(ky) - g.pad) * g.w;
                const double* grow = gbo + oy * g.out_w;
                for (int ox = ox0; ox <= ox1; ++ox) {
                  const std::size_t xi = xrow + ox * g.stride + static_cast<int>(kx) - g.pad;
                  wsum += grow[ox] * xv[xi];
                  if (gx) gx[xi] += grow[ox] * wk;
                }
              }
              if (gw) gw[woff + ky * g.k + kx] += wsum;
            }
          }
        }
      }
    }
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  require(xs.size() == 2 && ws.size() == 2 && xs[1] == ws[1], ErrorKind::kDimension,
          "linear: input " + shape_string(xs) + " incompatible with weight " +
              shape_string(ws));
  require(bias.shape() == Shape{ws[0]}, ErrorKind::kDimension, "linear bias must be [O]");
  const std::size_t batch = xs[0], in = xs[1], outn = ws[0];
  Tensor out({batch, outn});
  const double* xv = x.value().data();
  const double* wv = weight.value().data();
  const double* bv = bias.value().data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xr = xv + b * in;
    for (std::size_t o = 0; o < outn; ++o) {
      const double* wr = wv + o * in;
      double s = bv[o];
      for (std::size_t i = 0; i < in; ++i) s += wr[i] * xr[i];
      out[b * outn + o] = s;
    }
  }
  return make_result(std::move(out), {x, weight, bias}, [x, weight, bias, batch, in, outn](
                                                            Node& self) {
    const double* xv = x.value().data();
    const double* wv = weight.value().data();
    double* gx = wants_grad(x) ? x.node()->ensure_grad().data() : nullptr;
    double* gw = wants_grad(weight) ? weight.node()->ensure_grad().data() : nullptr;
    double* gb = wants_grad(bias) ? bias.node()->ensure_grad().data() : nullptr;
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t o = 0; o < outn; ++o) {
        const double g = self.grad[b * outn + o];
        if (g == 0.0) continue;
        if (gb) gb[o] += g;
        if (gw) {
          double* gwr = gw + o * in;
          const double* xr = xv + b * in;
          for (std::size_t i = 0; i < in; ++i) gwr[i] += g * xr[i];
        }
        if (gx) {
          double* gxr = gx + b * in;
          const double* wr = wv + o * in;
          for (std::size_t i = 0; i < in; ++i) gxr[i] += g * wr[i];
        }
      }
    }
  });
}

Var gather(const Var& a, std::span<const int> index) {
  const Shape& s = a.shape();
  require(s.size() == 2 && s[0] == index.size(), ErrorKind::kDimension,
          "gather: expected [B, K] with B indices");
  const std::size_t rows = s[0], cols = s[1];
  Tensor out({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    require(index[r] >= 0 && static_cast<std::size_t>(index[r]) < cols, ErrorKind::kDimension,
            "gather index out of range");
    out[r] = a.value()[r * cols + index[r]];
  }
  std::vector<int> idx(index.begin(), index.end());
  return make_result(std::move(out), {a}, [a, idx = std::move(idx), cols](Node& self) {
    Tensor& g = a.node()->ensure_grad();
    for (std::size_t r = 0; r < idx.size(); ++r) g[r * cols + idx[r]] += self.grad[r];
  });
}

namespace {

// Writes the masked softmax (no epsilon mixing) of one row into `soft`.
void masked_softmax_row(const double* logits, const std::uint8_t* mask, std::size_t k,
                        double* soft) {
  double mx = -INFINITY;
  std::size_t valid = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (mask[j]) {
      mx = std::max(mx, logits[j]);
      ++valid;
    }
  }
  require(valid > 0, ErrorKind::kContract, "bounded softmax with every action masked");
  double z = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    soft[j] = mask[j] ? std::exp(logits[j] - mx) : 0.0;
    z += soft[j];
  }
  for (std::size_t j = 0; j < k; ++j) soft[j] /= z;
}

std::size_t count_valid(const std::uint8_t* mask, std::size_t k) {
  std::size_t n = 0;
  for (std::size_t j = 0; j < k; ++j) n += mask[j] != 0;
  return n;
}

}  // namespace

Var masked_bounded_softmax(const Var& logits, std::span<const std::uint8_t> mask,
                           std::span<const double> eps) {
  const Shape& s = logits.shape();
  require(s.size() == 2, ErrorKind::kDimension, "bounded softmax expects [B, K] logits");
  require(mask.size() == s[0] * s[1], ErrorKind::kDimension,
          "bounded softmax mask does not match logits");
  require(eps.size() == s[0], ErrorKind::kDimension, "bounded softmax needs one epsilon per row");
  for (double e : eps) {
    require(e >= 0.0 && e <= 1.0, ErrorKind::kContract, "epsilon must lie in [0, 1]");
  }
  const std::size_t rows = s[0], k = s[1];
  Tensor soft({rows, k});
  Tensor out({rows, k});
  for (std::size_t r = 0; r < rows; ++r) {
    const std::uint8_t* m = mask.data() + r * k;
    masked_softmax_row(logits.value().data() + r * k, m, k, soft.data() + r * k);
    const double floor = eps[r] / static_cast<double>(count_valid(m, k));
    for (std::size_t j = 0; j < k; ++j) {
      out[r * k + j] = m[j] ? (1.0 - eps[r]) * soft[r * k + j] + floor : 0.0;
    }
  }
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  std::vector<double> e(eps.begin(), eps.end());
  return make_result(std::move(out), {logits},
                     [logits, soft = std::move(soft), m = std::move(m), e = std::move(e), rows,
                      k](Node& self) {
                       Tensor& g = logits.node()->ensure_grad();
                       for (std::size_t r = 0; r < rows; ++r) {
                         const double* sr = soft.data() + r * k;
                         const double* gr = self.grad.data() + r * k;
                         double dot = 0.0;
                         for (std::size_t j = 0; j < k; ++j) {
                           if (m[r * k + j]) dot += sr[j] * gr[j];
                         }
                         for (std::size_t j = 0; j < k; ++j) {
                           if (m[r * k + j]) g[r * k + j] += (1.0 - e[r]) * sr[j] * (gr[j] - dot);
                         }
                       }
                     });
}

Var masked_bounded_softmax(const Var& logits, std::span<const std::uint8_t> mask, double eps) {
  const std::size_t rows = logits.shape().empty() ? 0 : logits.shape()[0];
  const std::vector<double> e(rows, eps);
  return masked_bounded_softmax(logits, mask, e);
}

std::vector<double> masked_bounded_softmax(std::span<const double> logits,
                                           std::span<const std::uint8_t> mask, double eps) {
  require(logits.size() == mask.size(), ErrorKind::kDimension,
          "bounded softmax mask does not match logits");
  require(eps >= 0.0 && eps <= 1.0, ErrorKind::kContract, "epsilon must lie in [0, 1]");
  std::vector<double> out(logits.size());
  masked_softmax_row(logits.data(), mask.data(), logits.size(), out.data());
  const double floor = eps / static_cast<double>(count_valid(mask.data(), mask.size()));
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = mask[j] ? (1.0 - eps) * out[j] + floor : 0.0;
  }
  return out;
}

Adam::Adam(std::vector<Var> params, Options options)
    : params_(std::move(params)), options_(options) {
  for (const Var& p : params_) {
    require(p.requires_grad(), ErrorKind::kUsage, "Adam parameter does not require gradients");
    m_.emplace_back(p.shape(), 0.0);
    v_.emplace_back(p.shape(), 0.0);
  }
}

void Adam::step() {
  for (const Var& p : params_) {
    for (double g : p.grad().values()) {
      if (!std::isfinite(g)) fail(ErrorKind::kDivergence, "non-finite gradient in Adam step");
    }
  }
  ++steps_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Var& p = params_[k];
    const Tensor& g = p.grad();
    Tensor& value = p.mutable_value();
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g[i];
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      value[i] -= options_.lr * mhat / (std::sqrt(vhat) + options_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (Var& p : params_) p.zero_grad();
}

double clip_grad_norm(std::span<const Var> params, double max_norm) {
  double sq = 0.0;
  for (const Var& p : params) {
    for (double g : p.grad().values()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (const Var& p : params) {
      for (double& g : p.node()->ensure_grad().values()) g *= f;
    }
  }
  return norm;
}

void kaiming_normal(Tensor& weight, std::size_t fan_in, Rng& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  for (double& v : weight.values()) v = dist(rng);
}

const std::string* Checkpoint::find_metadata(const std::string& key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return &v;
  }
  return nullptr;
}

const Tensor* Checkpoint::find_tensor(const std::string& name) const {
  for (const auto& [k, t] : tensors) {
    if (k == name) return &t;
  }
  return nullptr;
}

namespace {

constexpr char kMagic[8] = {'M', 'I', 'P', 'P', 'C', 'K', 'P', 'T'};

template <typename T>
void put_le(std::ostream& os, T v) {
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    fail(ErrorKind::kParse, "truncated checkpoint");
  }
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes[i]) << (8 * i);
  return v;
}

void put_string(std::ostream& os, const std::string& s) {
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  const auto n = get_le<std::uint32_t>(is);
  require(n < (1u << 24), ErrorKind::kParse, "implausible string length in checkpoint");
  std::string s(n, '\0');
  if (n && !is.read(s.data(), n)) fail(ErrorKind::kParse, "truncated checkpoint");
  return s;
}

}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  os.write(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(os, kCheckpointVersion);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.metadata.size()));
  for (const auto& [k, v] : ckpt.metadata) {
    put_string(os, k);
    put_string(os, v);
  }
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    put_string(os, name);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_le<std::uint64_t>(os, d);
    for (double v : t.values()) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
  }
}

Checkpoint read_checkpoint(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    fail(ErrorKind::kParse, "not a checkpoint file (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(is);
  require(version == kCheckpointVersion, ErrorKind::kParse,
          "unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  const auto nmeta = get_le<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < nmeta; ++i) {
    std::string k = get_string(is);
    std::string v = get_string(is);
    ckpt.metadata.emplace_back(std::move(k), std::move(v));
  }
  const auto ntensors = get_le<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < ntensors; ++i) {
    std::string name = get_string(is);
    const auto rank = get_le<std::uint32_t>(is);
    require(rank <= 8, ErrorKind::kParse, "implausible tensor rank in checkpoint");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(get_le<std::uint64_t>(is));
    require(shape_size(shape) < (std::size_t{1} << 32), ErrorKind::kParse,
            "implausible tensor size in checkpoint");
    Tensor t(shape);
    for (double& v : t.values()) v = std::bit_cast<double>(get_le<std::uint64_t>(is));
    ckpt.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ckpt;
}

}  // namespace mipp::nn
