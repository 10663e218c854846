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

#include "echograph/autodiff.hpp"

#include <cmath>
#include <unordered_set>

#include "echograph/error.hpp"

namespace echograph::ad {

namespace {

thread_local bool g_grad_enabled = true;

Var make_node(Eigen::MatrixXd value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return n;
}

// Wires `out` into the graph when any parent needs a gradient.
template <typename Backward>
Var record(Eigen::MatrixXd value, std::vector<Var> parents, Backward&& fn) {
  Var out = make_node(std::move(value));
  if (!g_grad_enabled) return out;
  bool needs = false;
  for (const Var& p : parents) needs = needs || p->requires_grad;
  if (!needs) return out;
  out->requires_grad = true;
  out->parents = std::move(parents);
  out->backward = std::forward<Backward>(fn);
  return out;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols()) {
    throw ShapeError(std::string(op) + ": operand shapes differ");
  }
}

}  // namespace

Eigen::MatrixXd& Node::grad_ref() {
  if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
    grad = Eigen::MatrixXd::Zero(value.rows(), value.cols());
  }
  return grad;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var constant(Eigen::MatrixXd value) { return make_node(std::move(value)); }

Var leaf(Eigen::MatrixXd value) {
  Var n = make_node(std::move(value));
  n->requires_grad = true;
  return n;
}

void backward(const Var& root) {
  if (root->value.size() != 1) throw ShapeError("backward requires a scalar root");
  // Iterative post-order DFS for a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack = {{root.get(), 0}};
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && p->backward && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->grad_ref().setOnes();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->grad.size() > 0) n->backward(*n);
  }
}

Var matmul(const Var& a, const Var& b) {
  if (a->value.cols() != b->value.rows()) throw ShapeError("matmul: inner dimensions differ");
  return record(a->value * b->value, {a, b}, [](Node& out) {
    const Var& a = out.parents[0];
    const Var& b = out.parents[1];
    if (a->requires_grad) a->grad_ref().noalias() += out.grad * b->value.transpose();
    if (b->requires_grad) b->grad_ref().noalias() += a->value.transpose() * out.grad;
  });
}

Var matmul_tn(const Var& a, const Var& b) {
  if (a->value.rows() != b->value.rows()) throw ShapeError("matmul_tn: inner dimensions differ");
  return record(a->value.transpose() * b->value, {a, b}, [](Node& out) {
    const Var& a = out.parents[0];
    const Var& b = out.parents[1];
    if (a->requires_grad) a->grad_ref().noalias() += b->value * out.grad.transpose();
    if (b->requires_grad) b->grad_ref().noalias() += a->value * out.grad;
  });
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  return record(a->value + b->value, {a, b}, [](Node& out) {
    for (const Var& p : out.parents) {
      if (p->requires_grad) p->grad_ref() += out.grad;
    }
  });
}

Var add_colwise(const Var& m, const Var& v) {
  if (v->value.cols() != 1 || v->value.rows() != m->value.rows()) {
    throw ShapeError("add_colwise: vector does not match matrix rows");
  }
  Eigen::MatrixXd value = m->value.colwise() + v->value.col(0);
  return record(std::move(value), {m, v}, [](Node& out) {
    const Var& m = out.parents[0];
    const Var& v = out.parents[1];
    if (m->requires_grad) m->grad_ref() += out.grad;
    if (v->requires_grad) v->grad_ref() += out.grad.rowwise().sum();
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  return record(a->value.cwiseProduct(b->value), {a, b}, [](Node& out) {
    const Var& a = out.parents[0];
    const Var& b = out.parents[1];
    if (a->requires_grad) a->grad_ref() += out.grad.cwiseProduct(b->value);
    if (b->requires_grad) b->grad_ref() += out.grad.cwiseProduct(a->value);
  });
}

Var scale(const Var& a, double s) {
  return record(a->value * s, {a}, [s](Node& out) { out.parents[0]->grad_ref() += s * out.grad; });
}

Var sigmoid(const Var& a) {
  Eigen::MatrixXd y = (1.0 + (-a->value.array()).exp()).inverse().matrix();
  return record(std::move(y), {a}, [](Node& out) {
    const auto y = out.value.array();
    out.parents[0]->grad_ref().array() += out.grad.array() * y * (1.0 - y);
  });
}

Var tanh(const Var& a) {
  Eigen::MatrixXd y = a->value.array().tanh().matrix();
  return record(std::move(y), {a}, [](Node& out) {
    const auto y = out.value.array();
    out.parents[0]->grad_ref().array() += out.grad.array() * (1.0 - y * y);
  });
}

Var relu(const Var& a) {
  Eigen::MatrixXd y = a->value.cwiseMax(0.0);
  return record(std::move(y), {a}, [](Node& out) {
    const Var& a = out.parents[0];
    a->grad_ref().array() += (a->value.array() > 0.0).cast<double>() * out.grad.array();
  });
}

Var sum(const Var& a) {
  Eigen::MatrixXd y(1, 1);
  y(0, 0) = a->value.sum();
  return record(std::move(y), {a}, [](Node& out) {
    out.parents[0]->grad_ref().array() += out.grad(0, 0);
  });
}

Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index n) {
  if (start < 0 || n < 0 || start + n > a->value.rows()) throw ShapeError("slice_rows out of range");
  return record(a->value.middleRows(start, n), {a}, [start, n](Node& out) {
    out.parents[0]->grad_ref().middleRows(start, n) += out.grad;
  });
}

Var concat_rows(std::span<const Var> parts) {
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts.empty() ? 0 : parts[0]->value.cols();
  for (const Var& p : parts) {
    if (p->value.cols() != cols) throw ShapeError("concat_rows: column counts differ");
    rows += p->value.rows();
  }
  Eigen::MatrixXd y(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    y.middleRows(at, p->value.rows()) = p->value;
    at += p->value.rows();
  }
  return record(std::move(y), std::vector<Var>(parts.begin(), parts.end()), [](Node& out) {
    Eigen::Index at = 0;
    for (const Var& p : out.parents) {
      const Eigen::Index r = p->value.rows();
      if (p->requires_grad) p->grad_ref() += out.grad.middleRows(at, r);
      at += r;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  Eigen::Index cols = 0;
  const Eigen::Index rows = parts.empty() ? 0 : parts[0]->value.rows();
  for (const Var& p : parts) {
    if (p->value.rows() != rows) throw ShapeError("concat_cols: row counts differ");
    cols += p->value.cols();
  }
  Eigen::MatrixXd y(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    y.middleCols(at, p->value.cols()) = p->value;
    at += p->value.cols();
  }
  return record(std::move(y), std::vector<Var>(parts.begin(), parts.end()), [](Node& out) {
    Eigen::Index at = 0;
    for (const Var& p : out.parents) {
      const Eigen::Index c = p->value.cols();
      if (p->requires_grad) p->grad_ref() += out.grad.middleCols(at, c);
      at += c;
    }
  });
}

Var column(const Var& table, Eigen::Index index) {
  if (index < 0 || index >= table->value.cols()) throw DomainError("column index out of range");
  return record(table->value.col(index), {table}, [index](Node& out) {
    out.parents[0]->grad_ref().col(index) += out.grad.col(0);
  });
}

Var softmax(const Var& logits) {
  if (logits->value.cols() != 1) throw ShapeError("softmax expects a column vector");
  const double mx = logits->value.maxCoeff();
  Eigen::MatrixXd y = (logits->value.array() - mx).exp().matrix();
  y /= y.sum();
  return record(std::move(y), {logits}, [](Node& out) {
    const double dot = out.grad.cwiseProduct(out.value).sum();
    out.parents[0]->grad_ref().array() += out.value.array() * (out.grad.array() - dot);
  });
}

Var smoothed_cross_entropy(const Var& logits, int target, double eps) {
  const Eigen::MatrixXd& z = logits->value;
  if (z.cols() != 1) throw ShapeError("cross entropy expects a column of logits");
  const Eigen::Index v = z.rows();
  if (target < 0 || target >= v) throw DomainError("target id out of range");
  const double mx = z.maxCoeff();
  const double lse = mx + std::log((z.array() - mx).exp().sum());
  Eigen::VectorXd q = Eigen::VectorXd::Constant(v, eps / static_cast<double>(v));
  q(target) += 1.0 - eps;
  Eigen::MatrixXd loss(1, 1);
  loss(0, 0) = -(q.array() * (z.col(0).array() - lse)).sum();
  return record(std::move(loss), {logits}, [q = std::move(q), lse](Node& out) {
    const Var& z = out.parents[0];
    Eigen::VectorXd p = (z->value.col(0).array() - lse).exp().matrix();
    z->grad_ref().col(0) += out.grad(0, 0) * (p - q);
  });
}

Var poisson_nll(const Var& lambda, long n, double floor) {
  if (lambda->value.size() != 1) throw ShapeError("poisson_nll expects a scalar rate");
  if (n < 0) throw DomainError("negative count");
  const double lam = lambda->value(0, 0);
  const double guarded = std::max(lam, floor);
  Eigen::MatrixXd loss(1, 1);
  loss(0, 0) = lam - static_cast<double>(n) * std::log(guarded) + std::lgamma(n + 1.0);
  return record(std::move(loss), {lambda}, [n, floor](Node& out) {
    const double lam = out.parents[0]->value(0, 0);
    const double dlog = lam > floor ? static_cast<double>(n) / lam : 0.0;
    out.parents[0]->grad_ref()(0, 0) += out.grad(0, 0) * (1.0 - dlog);
  });
}

}  // namespace echograph::ad
