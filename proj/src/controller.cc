/* Copyright 2026 The streamctl Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "streamctl/controller.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace streamctl {

namespace {

Eigen::MatrixXd Silu(const Eigen::MatrixXd& x) { return x.array() / (1.0 + (-x.array()).exp()); }

Eigen::MatrixXd SiluGrad(const Eigen::MatrixXd& x) {
  const Eigen::ArrayXXd s = 1.0 / (1.0 + (-x.array()).exp());
  return (s * (1.0 + x.array() * (1.0 - s))).matrix();
}

Json MatrixToJson(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd MatrixFromJson(const Json& j, size_t rows, size_t cols) {
  if (j.size() != rows) throw Error("schema", "checkpoint layer has wrong row count");
  Eigen::MatrixXd m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) throw Error("schema", "checkpoint layer has wrong column count");
    for (size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace

QNetwork::QNetwork(size_t input_size, std::vector<size_t> head_sizes, std::vector<size_t> hidden, uint64_t seed)
    : input_size_(input_size), heads_(std::move(head_sizes)), hidden_(std::move(hidden)) {
  if (input_size_ == 0 || heads_.empty()) throw Error("schema", "network needs inputs and at least one head");
  size_t off = 0;
  for (size_t h : heads_) {
    offsets_.push_back(off);
    off += h;
  }
  std::vector<size_t> widths = {input_size_};
  widths.insert(widths.end(), hidden_.begin(), hidden_.end());
  widths.push_back(off);
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    w_.emplace_back(Eigen::MatrixXd::Zero(widths[l + 1], widths[l]));
    b_.emplace_back(Eigen::VectorXd::Zero(widths[l + 1]));
  }
  Init(seed);
}

void QNetwork::Init(uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (size_t l = 0; l < w_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w_[l].cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < w_[l].size(); ++i) w_[l].data()[i] = u(rng);
    for (Eigen::Index i = 0; i < b_[l].size(); ++i) b_[l][i] = u(rng);
  }
}

size_t QNetwork::output_count() const { return std::accumulate(heads_.begin(), heads_.end(), size_t{0}); }

void QNetwork::SetZero() {
  for (auto& w : w_) w.setZero();
  for (auto& b : b_) b.setZero();
}

void QNetwork::CheckInput(std::span<const double> z) const {
  if (z.size() != input_size_) {
    throw Error("range", "context has " + std::to_string(z.size()) + " entries, network expects " +
                             std::to_string(input_size_));
  }
}

Eigen::VectorXd QNetwork::ForwardFlat(std::span<const double> z) const {
  CheckInput(z);
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
  for (size_t l = 0; l < w_.size(); ++l) {
    Eigen::VectorXd pre = w_[l] * a + b_[l];
    a = l + 1 < w_.size() ? Eigen::VectorXd(Silu(pre)) : pre;
  }
  return a;
}

std::vector<std::vector<double>> QNetwork::Forward(std::span<const double> z) const {
  const Eigen::VectorXd q = ForwardFlat(z);
  std::vector<std::vector<double>> out;
  for (size_t d = 0; d < heads_.size(); ++d) {
    out.emplace_back(q.data() + offsets_[d], q.data() + offsets_[d] + heads_[d]);
  }
  return out;
}

double QNetwork::Loss(std::span<const Experience> batch) const { return LossAndGradient(batch, nullptr); }

double QNetwork::LossAndGradient(std::span<const Experience> batch, Gradients* grad) const {
  if (batch.empty()) throw Error("range", "update needs a nonempty batch");
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd a(input_size_, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    CheckInput(batch[i].z);
    a.col(i) = Eigen::Map<const Eigen::VectorXd>(batch[i].z.data(), static_cast<Eigen::Index>(input_size_));
  }
  std::vector<Eigen::MatrixXd> acts = {a}, pres;
  for (size_t l = 0; l < w_.size(); ++l) {
    Eigen::MatrixXd pre = (w_[l] * acts.back()).colwise() + b_[l];
    pres.push_back(pre);
    acts.push_back(l + 1 < w_.size() ? Silu(pre) : pre);
  }
  const Eigen::MatrixXd& q = acts.back();
  const double m = static_cast<double>(heads_.size());
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(q.rows(), n);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Action& act = batch[i].a;
    if (act.index.size() != heads_.size()) throw Error("range", "action arity does not match the network heads");
    for (size_t d = 0; d < heads_.size(); ++d) {
      const Eigen::Index k = static_cast<Eigen::Index>(offsets_[d] + act.index[d]);
      const double err = batch[i].r - q(k, i);
      loss += err * err / m;
      delta(k, i) = -2.0 * err / (m * static_cast<double>(n));
    }
  }
  loss /= static_cast<double>(n);
  if (!std::isfinite(loss)) throw Error("numeric", "non-finite controller loss");
  if (grad == nullptr) return loss;

  grad->w.resize(w_.size());
  grad->b.resize(b_.size());
  for (size_t l = w_.size(); l-- > 0;) {
    grad->w[l] = delta * acts[l].transpose();
    grad->b[l] = delta.rowwise().sum();
    if (l > 0) delta = (w_[l].transpose() * delta).cwiseProduct(SiluGrad(pres[l - 1]));
  }
  return loss;
}

double QNetwork::Update(std::span<const Experience> batch, double learning_rate, double clip_norm) {
  Gradients g;
  const double loss = LossAndGradient(batch, &g);
  double sq = 0.0;
  for (size_t l = 0; l < w_.size(); ++l) sq += g.w[l].squaredNorm() + g.b[l].squaredNorm();
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw Error("numeric", "non-finite gradient norm");
  const double scale = (clip_norm > 0.0 && norm > clip_norm) ? clip_norm / norm : 1.0;
  for (size_t l = 0; l < w_.size(); ++l) {
    w_[l] -= learning_rate * scale * g.w[l];
    b_[l] -= learning_rate * scale * g.b[l];
  }
  return loss;
}

Json QNetwork::ToJson() const {
  Json layers = Json::array();
  for (size_t l = 0; l < w_.size(); ++l) {
    layers.push_back({{"w", MatrixToJson(w_[l])}, {"b", std::vector<double>(b_[l].data(), b_[l].data() + b_[l].size())}});
  }
  return Json{{"input", input_size_}, {"hidden", hidden_}, {"heads", heads_}, {"activation", kActivation},
              {"layers", layers}};
}

QNetwork QNetwork::FromJson(const Json& j) {
  if (j.value("activation", std::string(kActivation)) != kActivation) {
    throw Error("schema", "checkpoint activation is not " + std::string(kActivation));
  }
  QNetwork net(j.at("input").get<size_t>(), j.at("heads").get<std::vector<size_t>>(),
               j.at("hidden").get<std::vector<size_t>>(), 0);
  const Json& layers = j.at("layers");
  if (layers.size() != net.w_.size()) throw Error("schema", "checkpoint has wrong layer count");
  for (size_t l = 0; l < net.w_.size(); ++l) {
    net.w_[l] = MatrixFromJson(layers[l].at("w"), net.w_[l].rows(), net.w_[l].cols());
    const auto b = layers[l].at("b").get<std::vector<double>>();
    if (b.size() != static_cast<size_t>(net.b_[l].size())) throw Error("schema", "checkpoint bias has wrong size");
    net.b_[l] = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  }
  return net;
}

void ReplayBuffer::Push(Experience e) {
  if (capacity_ == 0) return;
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(e));
}

std::vector<Experience> ReplayBuffer::Sample(size_t n, std::mt19937_64& rng) const {
  n = std::min(n, items_.size());
  std::vector<size_t> idx(items_.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<Experience> out;
  out.reserve(n);
  // Partial Fisher-Yates.
  for (size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
    out.push_back(items_[idx[i]]);
  }
  return out;
}

Strategy ParseStrategy(const std::string& s) {
  if (s == "egreedy" || s == "epsilon-greedy") return Strategy::kEpsilonGreedy;
  if (s == "ucb") return Strategy::kUcb;
  throw Error("schema", "unknown strategy '" + s + "' (egreedy|ucb)");
}

std::string StrategyName(Strategy s) { return s == Strategy::kUcb ? "ucb" : "egreedy"; }

Explorer::Explorer(ExplorationConfig cfg, const std::vector<size_t>& head_sizes)
    : cfg_(cfg), epsilon_(cfg.epsilon_init) {
  for (size_t h : head_sizes) counts_.emplace_back(h, 0);
}

Action Explorer::Greedy(const std::vector<std::vector<double>>& q) {
  Action a;
  for (const auto& head : q) {
    a.index.push_back(static_cast<int>(std::max_element(head.begin(), head.end()) - head.begin()));
  }
  return a;
}

Action Explorer::SelectEpsilonGreedy(const std::vector<std::vector<double>>& q, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Action a;
  if (unit(rng) < epsilon_) {
    for (const auto& head : q) {
      std::uniform_int_distribution<int> pick(0, static_cast<int>(head.size()) - 1);
      a.index.push_back(pick(rng));
    }
  } else {
    a = Greedy(q);
  }
  epsilon_ = std::max(cfg_.epsilon_min, epsilon_ * cfg_.epsilon_decay);
  return a;
}

Action Explorer::SelectUcb(const std::vector<std::vector<double>>& q) {
  if (counts_.size() != q.size()) throw Error("range", "exploration counts do not match the heads");
  const double log_tau = std::log(static_cast<double>(std::max<int64_t>(tau_, 1)));
  Action a;
  for (size_t d = 0; d < q.size(); ++d) {
    int best = -1;
    double best_v = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < q[d].size(); ++i) {
      if (counts_[d][i] == 0) {
        best = static_cast<int>(i);
        break;
      }
      const double v = q[d][i] + cfg_.ucb_c * std::sqrt(log_tau / static_cast<double>(counts_[d][i]));
      if (v > best_v) {
        best_v = v;
        best = static_cast<int>(i);
      }
    }
    a.index.push_back(best);
    ++counts_[d][best];
  }
  ++tau_;
  return a;
}

Action Explorer::Select(const std::vector<std::vector<double>>& q, std::mt19937_64& rng) {
  return cfg_.strategy == Strategy::kUcb ? SelectUcb(q) : SelectEpsilonGreedy(q, rng);
}

Json Explorer::ToJson() const { return Json{{"epsilon", epsilon_}, {"tau", tau_}, {"counts", counts_}}; }

void Explorer::LoadState(const Json& j) {
  epsilon_ = j.at("epsilon").get<double>();
  tau_ = j.at("tau").get<int64_t>();
  auto c = j.at("counts").get<std::vector<std::vector<int64_t>>>();
  if (c.size() != counts_.size()) throw Error("schema", "exploration counts do not match the heads");
  counts_ = std::move(c);
}

Json ControllerConfig::ToJson() const {
  return Json{{"hidden", hidden},
              {"lr", learning_rate},
              {"clip_norm", clip_norm},
              {"batch_size", batch_size},
              {"steps_per_flush", steps_per_flush},
              {"buffer_capacity", buffer_capacity},
              {"strategy", StrategyName(exploration.strategy)},
              {"epsilon_init", exploration.epsilon_init},
              {"epsilon_decay", exploration.epsilon_decay},
              {"epsilon_min", exploration.epsilon_min},
              {"ucb_c", exploration.ucb_c},
              {"seed", seed}};
}

ControllerConfig ControllerConfig::FromJson(const Json& j) {
  ControllerConfig c;
  c.hidden = j.value("hidden", c.hidden);
  c.learning_rate = j.value("lr", c.learning_rate);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.steps_per_flush = j.value("steps_per_flush", c.steps_per_flush);
  c.buffer_capacity = j.value("buffer_capacity", c.buffer_capacity);
  c.exploration.strategy = ParseStrategy(j.value("strategy", std::string("egreedy")));
  c.exploration.epsilon_init = j.value("epsilon_init", c.exploration.epsilon_init);
  c.exploration.epsilon_decay = j.value("epsilon_decay", c.exploration.epsilon_decay);
  c.exploration.epsilon_min = j.value("epsilon_min", c.exploration.epsilon_min);
  c.exploration.ucb_c = j.value("ucb_c", c.exploration.ucb_c);
  c.seed = j.value("seed", c.seed);
  if (!(c.learning_rate > 0.0) || c.batch_size == 0 || c.steps_per_flush < 0) {
    throw Error("schema", "invalid controller config: " + j.dump());
  }
  return c;
}

Controller::Controller(const DecisionSpace& space, size_t context_size, ControllerConfig cfg)
    : cfg_(std::move(cfg)),
      net_(context_size, space.sizes(), cfg_.hidden, MixSeed({cfg_.seed, 0x6e6574})),
      explorer_(cfg_.exploration, space.sizes()),
      buffer_(cfg_.buffer_capacity),
      rng_(MixSeed({cfg_.seed, 0x72756e})) {}

Action Controller::Select(std::span<const double> z, bool explore) {
  const auto q = net_.Forward(z);
  return explore ? explorer_.Select(q, rng_) : Explorer::Greedy(q);
}

double Controller::Train() {
  if (buffer_.size() == 0 || cfg_.steps_per_flush == 0) return 0.0;
  double sum = 0.0;
  for (int s = 0; s < cfg_.steps_per_flush; ++s) {
    const auto batch = buffer_.Sample(cfg_.batch_size, rng_);
    sum += net_.Update(batch, cfg_.learning_rate, cfg_.clip_norm);
  }
  return sum / cfg_.steps_per_flush;
}

Json Controller::Checkpoint() const {
  return Json{{"format", "streamctl-controller"}, {"version", 1}, {"config", cfg_.ToJson()},
              {"network", net_.ToJson()}, {"exploration", explorer_.ToJson()}};
}

Controller Controller::FromCheckpoint(const Json& j, const DecisionSpace& space) {
  if (j.value("format", std::string()) != "streamctl-controller") throw Error("schema", "not a controller checkpoint");
  QNetwork net = QNetwork::FromJson(j.at("network"));
  if (net.head_sizes() != space.sizes()) throw Error("schema", "checkpoint heads do not match the decision space");
  Controller c(space, net.input_size(), ControllerConfig::FromJson(j.at("config")));
  c.net_ = std::move(net);
  c.explorer_.LoadState(j.at("exploration"));
  return c;
}

}  // namespace streamctl
