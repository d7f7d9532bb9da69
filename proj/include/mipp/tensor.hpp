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

// Small reverse-mode differentiation core: dense float64 tensors, the handful
// of operations the actor/critic networks need, Adam, and a binary parameter
// checkpoint format.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mipp/random.hpp"

namespace mipp::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double item() const;
  void fill(double v);
  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

struct Node;

// Handle to a value recorded on the tape. Leaves created with
// requires_grad accumulate gradients across backward() calls until reset.
class Var {
 public:
  Var() = default;
  static Var leaf(Tensor value, bool requires_grad = false);
  static Var constant(Tensor value) { return leaf(std::move(value), false); }

  bool defined() const { return node_ != nullptr; }
  bool requires_grad() const;
  const Tensor& value() const;
  Tensor& mutable_value();
  const Shape& shape() const { return value().shape(); }
  const Tensor& grad() const;
  Tensor& mutable_grad();
  void zero_grad();

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  friend Var make_result(Tensor, std::vector<Var>, std::function<void(Node&)>);

  std::shared_ptr<Node> node_;
};

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first use
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backward;  // propagates `grad` into parents

  Tensor& ensure_grad();
};

// Disables tape recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Reverse pass from a scalar. Throws a usage error if nothing was recorded.
void backward(const Var& loss);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var square(const Var& a);
Var log(const Var& a);
Var relu(const Var& a);
Var sum(const Var& a);
Var mean(const Var& a);
Var reshape(const Var& a, Shape shape);

// x: [B, C, H, W], weight: [O, C, k, k], bias: [O] -> [B, O, H', W'] with
// H' = floor((H + 2 * padding - k) / stride) + 1.
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int padding);

// x: [B, I], weight: [O, I], bias: [O] -> [B, O].
Var linear(const Var& x, const Var& weight, const Var& bias);

// a: [B, K] -> [B], picking a[b, index[b]].
Var gather(const Var& a, std::span<const int> index);

// logits: [B, K]; mask: B*K flags (nonzero = valid). Per row,
// (1 - eps) * softmax over valid entries + eps / |valid|; invalid entries are 0.
Var masked_bounded_softmax(const Var& logits, std::span<const std::uint8_t> mask, double eps);
Var masked_bounded_softmax(const Var& logits, std::span<const std::uint8_t> mask,
                           std::span<const double> eps);  // one eps per row

// Single-row convenience over plain vectors.
std::vector<double> masked_bounded_softmax(std::span<const double> logits,
                                           std::span<const std::uint8_t> mask, double eps);

class Adam {
 public:
  struct Options {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam(std::vector<Var> params, Options options);

  // Throws a divergence error before touching parameters if any gradient
  // is non-finite.
  void step();
  void zero_grad();

  std::int64_t steps() const { return steps_; }
  const Options& options() const { return options_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  std::vector<Var> params_;
  Options options_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t steps_ = 0;
};

// Rescales gradients so their global L2 norm is at most max_norm. Returns the
// norm before scaling.
double clip_grad_norm(std::span<const Var> params, double max_norm);

void kaiming_normal(Tensor& weight, std::size_t fan_in, Rng& rng);

// Checkpoint byte layout (all integers little-endian):
//   8 bytes  magic "MIPPCKPT"
//   u32      format version (1)
//   u32      metadata count, then per entry: u32 len + key, u32 len + value
//   u32      tensor count, then per tensor: u32 len + name, u32 rank,
//            rank * u64 dims, product(dims) * f64 values
struct Checkpoint {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const std::string* find_metadata(const std::string& key) const;
  const Tensor* find_tensor(const std::string& name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);

}  // namespace mipp::nn
