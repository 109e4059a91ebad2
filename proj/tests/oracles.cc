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
#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "streamctl/controller.h"
#include "streamctl/perception.h"

namespace streamctl::testing {
namespace {

struct Fraction {
  int64_t num = 0, den = 1;

  static Fraction Of(int64_t n, int64_t d) {
    const int64_t g = std::gcd(n, d);
    return {n / g, d / g};
  }
  Fraction operator+(const Fraction& o) const { return Of(num * o.den + o.num * den, den * o.den); }
  Fraction operator-(const Fraction& o) const { return Of(num * o.den - o.num * den, den * o.den); }
  Fraction operator*(const Fraction& o) const { return Of(num * o.num, den * o.den); }
  bool operator<(const Fraction& o) const { return num * o.den < o.num * den; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// Intersection and union areas of integer boxes.
std::pair<int64_t, int64_t> Overlap(const Box& a, const Box& b) {
  const auto ix = static_cast<int64_t>(std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1)));
  const auto iy = static_cast<int64_t>(std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1)));
  const int64_t inter = ix * iy;
  const auto area = [](const Box& x) { return static_cast<int64_t>(x.width()) * static_cast<int64_t>(x.height()); };
  return {inter, area(a) + area(b) - inter};
}

Box RandomBox(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pos(0, 6), side(1, 4);
  const double x = pos(rng), y = pos(rng);
  return {x, y, x + side(rng), y + side(rng)};
}

}  // namespace

ApCase RandomApCase(std::mt19937_64& rng, int max_dets, int max_gts) {
  std::uniform_int_distribution<int> nd(0, max_dets), ng(0, max_gts), image(0, 1), score(1, 5);
  ApCase c;
  const int n_gt = ng(rng), n_det = nd(rng);
  for (int i = 0; i < n_gt; ++i) c.gts.push_back({image(rng), RandomBox(rng)});
  for (int i = 0; i < n_det; ++i) {
    // Half the detections copy or perturb a ground-truth box.
    Box b = RandomBox(rng);
    int img = image(rng);
    if (!c.gts.empty() && (rng() & 1)) {
      const ApGroundTruth& g = c.gts[rng() % c.gts.size()];
      img = g.image;
      b = g.box.Translated(static_cast<double>(rng() % 2), 0.0);
    }
    // Coarse scores so that ties occur.
    c.dets.push_back({img, b, score(rng) / 5.0});
  }
  return c;
}

double BruteForceAp(const std::vector<ApDetection>& dets, const std::vector<ApGroundTruth>& gts, double thr) {
  if (gts.empty()) return dets.empty() ? 1.0 : 0.0;
  std::vector<size_t> rank(dets.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](size_t a, size_t b) { return dets[a].score > dets[b].score; });

  // thr as an exact fraction (thresholds are multiples of 0.05).
  const Fraction t = Fraction::Of(static_cast<int64_t>(std::llround(thr * 100.0)), 100);
  const auto n = static_cast<int64_t>(gts.size());
  std::vector<Fraction> precision, recall;
  for (size_t k = 1; k <= rank.size(); ++k) {
    std::vector<bool> used(gts.size(), false);
    int64_t tp = 0;
    for (size_t i = 0; i < k; ++i) {
      const ApDetection& d = dets[rank[i]];
      int best = -1;
      Fraction best_iou = Fraction::Of(-1, 1);
      for (size_t g = 0; g < gts.size(); ++g) {
        if (used[g] || gts[g].image != d.image) continue;
        const auto [inter, uni] = Overlap(d.box, gts[g].box);
        const Fraction iou = Fraction::Of(inter, uni);
        if (!(iou < t) && best_iou < iou) {
          best_iou = iou;
          best = static_cast<int>(g);
        }
      }
      if (best >= 0) {
        used[best] = true;
        ++tp;
      }
    }
    precision.push_back(Fraction::Of(tp, static_cast<int64_t>(k)));
    recall.push_back(Fraction::Of(tp, n));
  }
  Fraction ap, prev;
  for (size_t k = 0; k < precision.size(); ++k) {
    Fraction envelope = precision[k];
    for (size_t j = k; j < precision.size(); ++j) envelope = std::max(envelope, precision[j]);
    ap = ap + (recall[k] - prev) * envelope;
    prev = recall[k];
  }
  return ap.value();
}

double ConstantRhoMismatch(double rho_frames, SchedulerPolicy policy, int frames) {
  const DecisionSpace space = SpaceWithSizes({2});
  const RuntimeProfile profile = RuntimeProfile::FromCurve(
      "constant", space, [&](const Action&) { return rho_frames * kDefaultFramePeriod; }, 0.0, 1.0, 0);
  SceneSpec scene;
  scene.frames = frames;
  const Sequence seq = GenerateSequence(scene, "rho", 1);
  const SyntheticSource source(space, DegradationModel{}, 1);
  PerceptionSim sim(seq, space, profile, source);
  ScheduleOptions opts;
  opts.policy = policy;
  const ScheduleResult r = RunSchedule(sim, Action{{0}}, opts);
  return MeanTemporalMismatch(r.records, seq.frames, seq.frame_period);
}

double GradientRelativeError(std::mt19937_64& rng, double h) {
  const std::vector<size_t> heads = {5, 4, 5, 5};
  QNetwork net(10, heads, {16, 16, 16}, rng());
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Experience e;
  for (int i = 0; i < 10; ++i) e.z.push_back(gauss(rng));
  for (size_t h_size : heads) e.a.index.push_back(static_cast<int>(rng() % h_size));
  e.r = unit(rng);
  const std::vector<Experience> batch = {e};

  QNetwork::Gradients g;
  net.LossAndGradient(batch, &g);
  double diff2 = 0.0, ga2 = 0.0, gf2 = 0.0;
  auto probe = [&](double& param, double analytic) {
    const double keep = param;
    param = keep + h;
    const double up = net.Loss(batch);
    param = keep - h;
    const double down = net.Loss(batch);
    param = keep;
    const double fd = (up - down) / (2.0 * h);
    diff2 += (analytic - fd) * (analytic - fd);
    ga2 += analytic * analytic;
    gf2 += fd * fd;
  };
  for (size_t l = 0; l < net.weights().size(); ++l) {
    auto& w = net.weights()[l];
    for (Eigen::Index i = 0; i < w.size(); ++i) probe(w.data()[i], g.w[l].data()[i]);
    auto& b = net.biases()[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) probe(b.data()[i], g.b[l].data()[i]);
  }
  const double scale = std::max({std::sqrt(ga2), std::sqrt(gf2), 1e-12});
  return std::sqrt(diff2) / scale;
}

DecisionSpace SpaceWithSizes(const std::vector<size_t>& sizes) {
  std::vector<DecisionDimension> dims;
  for (size_t d = 0; d < sizes.size(); ++d) {
    DecisionDimension dim;
    dim.name = "d" + std::to_string(d);
    for (size_t c = 0; c < sizes[d]; ++c) dim.choices.push_back({std::to_string(c), static_cast<double>(c)});
    dims.push_back(std::move(dim));
  }
  return DecisionSpace(std::move(dims));
}

}  // namespace streamctl::testing
