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

#include "echograph/nn.hpp"

#include <cmath>

#include "echograph/error.hpp"

namespace echograph::nn {

ParamSet::ParamSet(const ParamSet& other) : names_(other.names_), index_(other.index_) {
  vars_.reserve(other.vars_.size());
  for (const Var& v : other.vars_) vars_.push_back(ad::leaf(v->value));
}

ParamSet& ParamSet::operator=(const ParamSet& other) {
  if (this != &other) {
    ParamSet copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Var ParamSet::add(const std::string& name, Eigen::MatrixXd init) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name " + name);
  index_[name] = vars_.size();
  names_.push_back(name);
  vars_.push_back(ad::leaf(std::move(init)));
  return vars_.back();
}

const Var& ParamSet::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ShapeError("no parameter named " + name);
  return vars_[it->second];
}

std::size_t ParamSet::num_scalars() const {
  std::size_t n = 0;
  for (const Var& v : vars_) n += static_cast<std::size_t>(v->value.size());
  return n;
}

void ParamSet::zero_grad() {
  for (const Var& v : vars_) v->grad_ref().setZero();
}

double ParamSet::grad_norm() const {
  double sq = 0.0;
  for (const Var& v : vars_) {
    if (v->grad.size() > 0) sq += v->grad.squaredNorm();
  }
  return std::sqrt(sq);
}

void ParamSet::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (const Var& v : vars_) {
      if (v->grad.size() > 0) v->grad *= s;
    }
  }
}

void ParamSet::sgd_step(double lr, const std::vector<std::string>& frozen) {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i]->grad.size() == 0) continue;
    bool skip = false;
    for (const auto& f : frozen) skip = skip || f == names_[i];
    if (!skip) vars_[i]->value -= lr * vars_[i]->grad;
  }
}

void ParamSet::round_to_float() {
  for (const Var& v : vars_) {
    v->value = v->value.cast<float>().cast<double>();
  }
}

bool ParamSet::all_finite() const {
  for (const Var& v : vars_) {
    if (!v->value.allFinite()) return false;
  }
  return true;
}

bool ParamSet::operator==(const ParamSet& other) const {
  if (names_ != other.names_) return false;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    const auto& a = vars_[i]->value;
    const auto& b = other.vars_[i]->value;
    if (a.rows() != b.rows() || a.cols() != b.cols() || a != b) return false;
  }
  return true;
}

Eigen::MatrixXd uniform_init(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

void LstmCell::declare(ParamSet& params, Rng& rng) const {
  const double s = 1.0 / std::sqrt(static_cast<double>(hidden));
  params.add(prefix + ".W", uniform_init(rng, 4 * hidden, input_dim + hidden, s));
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(4 * hidden, 1);
  b.middleRows(hidden, hidden).setOnes();  // forget-gate bias
  params.add(prefix + ".b", b);
}

std::pair<Var, Var> LstmCell::step(const ParamSet& params, const Var& x, const Var& h,
                                   const Var& c) const {
  const Var xh[] = {x, h};
  const Var gates = ad::add(ad::matmul(params.get(prefix + ".W"), ad::concat_rows(xh)),
                            params.get(prefix + ".b"));
  const Var i = ad::sigmoid(ad::slice_rows(gates, 0, hidden));
  const Var f = ad::sigmoid(ad::slice_rows(gates, hidden, hidden));
  const Var g = ad::tanh(ad::slice_rows(gates, 2 * hidden, hidden));
  const Var o = ad::sigmoid(ad::slice_rows(gates, 3 * hidden, hidden));
  const Var c_next = ad::add(ad::mul(f, c), ad::mul(i, g));
  const Var h_next = ad::mul(o, ad::tanh(c_next));
  return {h_next, c_next};
}

std::vector<LstmCell> BiLstmEncoder::cells() const {
  if (hidden % 2 != 0 || hidden < 2) throw ConfigError("encoder hidden size must be even");
  std::vector<LstmCell> out;
  for (int l = 0; l < layers; ++l) {
    const int in = l == 0 ? input_dim : hidden;
    out.push_back({prefix + ".l" + std::to_string(l) + ".fwd", in, hidden / 2});
    out.push_back({prefix + ".l" + std::to_string(l) + ".bwd", in, hidden / 2});
  }
  return out;
}

void BiLstmEncoder::declare(ParamSet& params, Rng& rng) const {
  for (const LstmCell& cell : cells()) cell.declare(params, rng);
}

Var BiLstmEncoder::forward(const ParamSet& params, const Var& frames) const {
  if (frames->value.rows() != input_dim) {
    throw ShapeError("encoder expects feature dimension " + std::to_string(input_dim) +
                     ", got " + std::to_string(frames->value.rows()));
  }
  const auto all = cells();
  const Eigen::Index t_len = frames->value.cols();
  Var layer_in = frames;
  for (int l = 0; l < layers; ++l) {
    std::vector<Var> columns;
    columns.reserve(t_len);
    for (Eigen::Index t = 0; t < t_len; ++t) columns.push_back(ad::column(layer_in, t));
    std::vector<Var> outputs[2];
    for (int dir = 0; dir < 2; ++dir) {
      const LstmCell& cell = all[2 * l + dir];
      Var h = ad::constant(Eigen::MatrixXd::Zero(cell.hidden, 1));
      Var c = h;
      outputs[dir].resize(t_len);
      for (Eigen::Index k = 0; k < t_len; ++k) {
        const Eigen::Index t = dir == 0 ? k : t_len - 1 - k;
        std::tie(h, c) = cell.step(params, columns[t], h, c);
        outputs[dir][t] = h;
      }
    }
    const Var halves[] = {ad::concat_cols(outputs[0]), ad::concat_cols(outputs[1])};
    layer_in = ad::concat_rows(halves);
  }
  return layer_in;
}

}  // namespace echograph::nn
