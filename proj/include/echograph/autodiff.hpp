// Copyright 2026 The Echograph Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

// Minimal reverse-mode automatic differentiation over dense double matrices.
//
// A Var is a shared node in a dynamically built graph. Ops record their
// parents and a backward closure only when gradients are enabled and at least
// one input requires a gradient; under NoGradGuard every op is a plain
// forward evaluation, which is how inference runs.
namespace echograph::ad {

struct Node {
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  /// Allocates a zero gradient on first use.
  Eigen::MatrixXd& grad_ref();
};

using Var = std::shared_ptr<Node>;

bool grad_enabled();

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

Var constant(Eigen::MatrixXd value);
Var leaf(Eigen::MatrixXd value);  // requires_grad = true

/// Runs backpropagation from a 1x1 root, seeding d(root)/d(root) = 1.
void backward(const Var& root);

Var matmul(const Var& a, const Var& b);
/// a^T b.
Var matmul_tn(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
/// m + v * 1^T for a column vector v with m.rows() entries.
Var add_colwise(const Var& m, const Var& v);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
/// Subgradient at exactly 0 is 0.
Var relu(const Var& a);
Var sum(const Var& a);
Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index n);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
/// Column `index` of a matrix, as a column vector (embedding lookup).
Var column(const Var& table, Eigen::Index index);
/// Softmax of a column vector.
Var softmax(const Var& logits);

/// Cross entropy of a column of logits against the label-smoothed target
/// (1 - eps) * onehot(target) + eps / V. Returns a 1x1 node.
Var smoothed_cross_entropy(const Var& logits, int target, double eps);

/// Poisson negative log-likelihood lambda - n log(max(lambda, floor)) +
/// lgamma(n + 1) for a 1x1 rate node.
Var poisson_nll(const Var& lambda, long n, double floor);

}  // namespace echograph::ad
