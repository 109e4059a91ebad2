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
#ifndef STREAMCTL_CONTROLLER_H_
#define STREAMCTL_CONTROLLER_H_

#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "streamctl/config_space.h"
#include "streamctl/util.h"

namespace streamctl {

struct Experience {
  std::vector<double> z;
  Action a;
  double r = 0.0;
};

// MLP with SiLU hidden activations and one linear head per decision
// dimension, stored as a single output layer of sum(head_sizes) units.
class QNetwork {
 public:
  struct Gradients {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
  };

  QNetwork() = default;
  QNetwork(size_t input_size, std::vector<size_t> head_sizes, std::vector<size_t> hidden = {256, 256, 256},
           uint64_t seed = 0);

  size_t input_size() const { return input_size_; }
  const std::vector<size_t>& head_sizes() const { return heads_; }
  const std::vector<size_t>& hidden_sizes() const { return hidden_; }
  size_t output_count() const;
  size_t head_offset(size_t dim) const { return offsets_.at(dim); }

  Eigen::VectorXd ForwardFlat(std::span<const double> z) const;
  // One list per dimension.
  std::vector<std::vector<double>> Forward(std::span<const double> z) const;

  // Batch mean of (1/M) sum_i (r - Q(z, a_i))^2.
  double Loss(std::span<const Experience> batch) const;
  double LossAndGradient(std::span<const Experience> batch, Gradients* grad) const;
  // One SGD step with global gradient-norm clipping; returns the pre-step loss.
  // Throws Error("numeric") on a non-finite loss.
  double Update(std::span<const Experience> batch, double learning_rate, double clip_norm = 10.0);

  std::vector<Eigen::MatrixXd>& weights() { return w_; }
  std::vector<Eigen::VectorXd>& biases() { return b_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return w_; }
  const std::vector<Eigen::VectorXd>& biases() const { return b_; }
  void SetZero();

  Json ToJson() const;
  static QNetwork FromJson(const Json& j);

  static constexpr const char* kActivation = "silu";

 private:
  void CheckInput(std::span<const double> z) const;
  void Init(uint64_t seed);

  size_t input_size_ = 0;
  std::vector<size_t> heads_;
  std::vector<size_t> hidden_;
  std::vector<size_t> offsets_;
  std::vector<Eigen::MatrixXd> w_;
  std::vector<Eigen::VectorXd> b_;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity = 100000) : capacity_(capacity) {}
  void Push(Experience e);
  // Uniform without replacement; returns min(n, size()) items.
  std::vector<Experience> Sample(size_t n, std::mt19937_64& rng) const;
  size_t size() const { return items_.size(); }
  size_t capacity() const { return capacity_; }

 private:
  size_t capacity_;
  std::deque<Experience> items_;
};

enum class Strategy { kEpsilonGreedy, kUcb };
Strategy ParseStrategy(const std::string& s);
std::string StrategyName(Strategy s);

struct ExplorationConfig {
  Strategy strategy = Strategy::kEpsilonGreedy;
  double epsilon_init = 1.0;
  double epsilon_decay = 0.999;
  double epsilon_min = 0.15;
  double ucb_c = 1.0;
};

class Explorer {
 public:
  Explorer() = default;
  Explorer(ExplorationConfig cfg, const std::vector<size_t>& head_sizes);

  static Action Greedy(const std::vector<std::vector<double>>& q);
  // With probability epsilon every dimension is drawn uniformly, otherwise the
  // per-dimension argmax; epsilon then decays once.
  Action SelectEpsilonGreedy(const std::vector<std::vector<double>>& q, std::mt19937_64& rng);
  // Per-dimension argmax of Q + c sqrt(ln tau / N); unvisited choices first.
  Action SelectUcb(const std::vector<std::vector<double>>& q);
  Action Select(const std::vector<std::vector<double>>& q, std::mt19937_64& rng);

  double epsilon() const { return epsilon_; }
  void set_epsilon(double e) { epsilon_ = e; }
  int64_t trials() const { return tau_; }
  void set_trials(int64_t t) { tau_ = t; }
  std::vector<std::vector<int64_t>>& counts() { return counts_; }
  const ExplorationConfig& config() const { return cfg_; }

  Json ToJson() const;
  void LoadState(const Json& j);

 private:
  ExplorationConfig cfg_;
  double epsilon_ = 1.0;
  int64_t tau_ = 0;
  std::vector<std::vector<int64_t>> counts_;
};

struct ControllerConfig {
  std::vector<size_t> hidden = {256, 256, 256};
  double learning_rate = 1e-3;
  double clip_norm = 10.0;
  size_t batch_size = 64;
  int steps_per_flush = 32;
  size_t buffer_capacity = 100000;
  ExplorationConfig exploration;
  uint64_t seed = 0;

  Json ToJson() const;
  static ControllerConfig FromJson(const Json& j);
};

class Controller {
 public:
  Controller(const DecisionSpace& space, size_t context_size, ControllerConfig cfg);

  std::vector<std::vector<double>> QValues(std::span<const double> z) const { return net_.Forward(z); }
  // Exploring selection during training, greedy otherwise.
  Action Select(std::span<const double> z, bool explore);
  void Observe(Experience e) { buffer_.Push(std::move(e)); }
  // steps_per_flush SGD steps on sampled batches; returns the mean pre-step
  // loss, 0 with an empty buffer.
  double Train();

  QNetwork& net() { return net_; }
  const QNetwork& net() const { return net_; }
  Explorer& explorer() { return explorer_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const ControllerConfig& config() const { return cfg_; }

  Json Checkpoint() const;
  static Controller FromCheckpoint(const Json& j, const DecisionSpace& space);

 private:
  ControllerConfig cfg_;
  QNetwork net_;
  Explorer explorer_;
  ReplayBuffer buffer_;
  std::mt19937_64 rng_;
};

}  // namespace streamctl

#endif  // STREAMCTL_CONTROLLER_H_
