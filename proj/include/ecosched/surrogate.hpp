// Copyright 2026 The ecosched Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Gradient-boosted regression trees over the three schedule features, and
// bootstrap ensembles whose disagreement serves as an uncertainty estimate.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ecosched/domain.hpp"
#include "ecosched/rng.hpp"

namespace ecosched {

inline constexpr int kNumFeatures = 3;
using Features = std::array<double, kNumFeatures>;

struct FeatureVector {
  double freq_norm = 0.0;
  double sm_norm = 0.0;
  int timing_idx = 0;

  Features as_array() const { return {freq_norm, sm_norm, static_cast<double>(timing_idx)}; }
};

// Frequency and SM allocation scaled to [0, 1] over their grids; launch timing
// as an ordinal category (trees isolate any category with two splits).
class FeatureEncoder {
 public:
  FeatureEncoder() = default;
  FeatureEncoder(double f_lo, double f_hi, int sm_lo, int sm_hi, int max_span)
      : f_lo_(f_lo), f_hi_(f_hi), sm_lo_(sm_lo), sm_hi_(sm_hi), max_span_(std::max(1, max_span)) {}
  FeatureEncoder(const FrequencyGrid& freqs, const SmGrid& sms, int max_span)
      : FeatureEncoder(freqs.min(), freqs.max(), sms.min(), sms.max(), max_span) {}

  FeatureVector encode(const ScheduleConfig& c) const {
    FeatureVector v;
    v.freq_norm = f_hi_ > f_lo_ ? (c.frequency_mhz - f_lo_) / (f_hi_ - f_lo_) : 0.0;
    v.sm_norm = c.timing.is_sequential() || sm_hi_ <= sm_lo_
                    ? 0.0
                    : static_cast<double>(c.sm_alloc - sm_lo_) / (sm_hi_ - sm_lo_);
    v.timing_idx = c.timing.ordinal(max_span_);
    return v;
  }

 private:
  double f_lo_ = 0.0, f_hi_ = 1.0;
  int sm_lo_ = 0, sm_hi_ = 1;
  int max_span_ = 1;
};

struct BoostingParams {
  int max_depth = 6;
  double learning_rate = 0.3;
  int rounds = 100;
};

// Min-max scaling of a target to [0, 1]. A constant target maps to 0.
struct Normalization {
  double lo = 0.0;
  double hi = 1.0;

  static Normalization of(std::span<const double> y) {
    if (y.empty()) return {};
    auto [mn, mx] = std::minmax_element(y.begin(), y.end());
    return {*mn, *mx};
  }
  double scale() const { return hi > lo ? hi - lo : 1.0; }
  double normalize(double v) const { return (v - lo) / scale(); }
  double denormalize(double z) const { return lo + z * scale(); }
};

// Axis-aligned binary regression tree fitted by exact greedy squared-error
// splits with a minimum leaf size of one.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 for a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };

  // `sorted[f]` lists row indices ordered by feature f (ties by index).
  static RegressionTree fit(std::span<const Features> x, std::span<const double> residual,
                            const std::array<std::vector<int>, kNumFeatures>& sorted, int max_depth) {
    const int n = static_cast<int>(x.size());
    RegressionTree tree;
    tree.nodes_.push_back({});
    std::vector<int> node_of(n, 0);

    struct Stat {
      double sum = 0.0;
      int count = 0;
    };
    std::vector<int> frontier = {0};
    for (int depth = 0; depth <= max_depth && !frontier.empty(); ++depth) {
      // Totals per active node.
      std::vector<Stat> total(tree.nodes_.size());
      for (int i = 0; i < n; ++i) {
        total[node_of[i]].sum += residual[i];
        total[node_of[i]].count += 1;
      }
      for (int id : frontier) tree.nodes_[id].value = total[id].count ? total[id].sum / total[id].count : 0.0;
      if (depth == max_depth) break;

      struct Best {
        double gain = 0.0;
        int feature = -1;
        double threshold = 0.0;
      };
      std::vector<Best> best(tree.nodes_.size());
      std::vector<char> active(tree.nodes_.size(), 0);
      for (int id : frontier) active[id] = 1;

      for (int f = 0; f < kNumFeatures; ++f) {
        std::vector<Stat> run(tree.nodes_.size());
        std::vector<double> last_x(tree.nodes_.size(), 0.0);
        for (int row : sorted[f]) {
          int id = node_of[row];
          if (!active[id]) continue;
          double xv = x[row][f];
          Stat& r = run[id];
          if (r.count > 0 && xv > last_x[id]) {
            const Stat& t = total[id];
            double sr = t.sum - r.sum;
            int nr = t.count - r.count;
            double gain = r.sum * r.sum / r.count + sr * sr / nr - t.sum * t.sum / t.count;
            if (gain > best[id].gain + 1e-14) best[id] = {gain, f, 0.5 * (last_x[id] + xv)};
          }
          r.sum += residual[row];
          r.count += 1;
          last_x[id] = xv;
        }
      }

      std::vector<int> next;
      for (int id : frontier) {
        if (best[id].feature < 0) continue;
        int l = static_cast<int>(tree.nodes_.size());
        tree.nodes_.push_back({});
        tree.nodes_.push_back({});
        tree.nodes_[id].feature = best[id].feature;
        tree.nodes_[id].threshold = best[id].threshold;
        tree.nodes_[id].left = l;
        tree.nodes_[id].right = l + 1;
        next.push_back(l);
        next.push_back(l + 1);
      }
      for (int i = 0; i < n; ++i) {
        const Node& nd = tree.nodes_[node_of[i]];
        if (nd.feature >= 0 && active[node_of[i]])
          node_of[i] = x[i][nd.feature] < nd.threshold ? nd.left : nd.right;
      }
      frontier = std::move(next);
    }
    return tree;
  }

  double predict(const Features& x) const {
    int id = 0;
    while (nodes_[id].feature >= 0) id = x[nodes_[id].feature] < nodes_[id].threshold ? nodes_[id].left : nodes_[id].right;
    return nodes_[id].value;
  }

  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  std::vector<Node> nodes_;
};

// Boosted squared-error regressor on a normalized target:
// prediction = base + learning_rate * sum of tree outputs, denormalized.
class TreeEnsembleModel {
 public:
  // Deterministic in the dataset and its order. `norm` overrides the target
  // normalization (bootstrap members share the full dataset's).
  static TreeEnsembleModel fit(const FeatureEncoder& encoder, std::span<const ScheduleConfig> configs,
                               std::span<const double> targets, const BoostingParams& params = {},
                               std::optional<Normalization> norm = std::nullopt) {
    if (configs.size() != targets.size()) throw std::invalid_argument("fit: configs and targets differ in size");
    if (configs.size() < 2) throw std::invalid_argument("fit: need at least two rows");
    TreeEnsembleModel m;
    m.encoder_ = encoder;
    m.params_ = params;
    m.norm_ = norm ? *norm : Normalization::of(targets);

    const std::size_t n = configs.size();
    std::vector<Features> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = encoder.encode(configs[i]).as_array();
      y[i] = m.norm_.normalize(targets[i]);
    }
    m.base_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

    std::array<std::vector<int>, kNumFeatures> sorted;
    for (int f = 0; f < kNumFeatures; ++f) {
      sorted[f].resize(n);
      std::iota(sorted[f].begin(), sorted[f].end(), 0);
      std::stable_sort(sorted[f].begin(), sorted[f].end(), [&](int a, int b) { return x[a][f] < x[b][f]; });
    }

    std::vector<double> pred(n, m.base_), residual(n);
    for (int round = 0; round < params.rounds; ++round) {
      for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - pred[i];
      RegressionTree tree = RegressionTree::fit(x, residual, sorted, params.max_depth);
      for (std::size_t i = 0; i < n; ++i) pred[i] += params.learning_rate * tree.predict(x[i]);
      m.trees_.push_back(std::move(tree));
    }
    return m;
  }

  double predict_normalized(const ScheduleConfig& c) const {
    Features f = encoder_.encode(c).as_array();
    double s = base_;
    for (const auto& t : trees_) s += params_.learning_rate * t.predict(f);
    return s;
  }

  double predict(const ScheduleConfig& c) const { return norm_.denormalize(predict_normalized(c)); }

  const Normalization& normalization() const { return norm_; }
  double base_prediction() const { return base_; }
  std::size_t num_trees() const { return trees_.size(); }

 private:
  FeatureEncoder encoder_;
  BoostingParams params_;
  Normalization norm_;
  double base_ = 0.0;
  std::vector<RegressionTree> trees_;
};

enum class Resampling { kBootstrap, kIdentity };

struct BootstrapEnsemble {
  std::vector<TreeEnsembleModel> members;
  std::vector<std::uint64_t> member_seeds;

  std::vector<double> predict_normalized(const ScheduleConfig& c) const {
    std::vector<double> out;
    out.reserve(members.size());
    for (const auto& m : members) out.push_back(m.predict_normalized(c));
    return out;
  }
};

// Member m is fitted on ceil(fraction * n) rows drawn with replacement under
// its own seed. Members share the normalization of the full dataset so their
// normalized predictions are comparable.
inline BootstrapEnsemble fit_ensemble(const FeatureEncoder& encoder, std::span<const ScheduleConfig> configs,
                                      std::span<const double> targets, int num_members, double fraction,
                                      std::uint64_t seed, const BoostingParams& params = {},
                                      Resampling resampling = Resampling::kBootstrap) {
  if (num_members < 2) throw std::invalid_argument("fit_ensemble: need at least two members");
  if (configs.size() < 5) throw std::invalid_argument("fit_ensemble: need at least five rows");
  if (!(fraction > 0.0) || fraction > 1.0) throw std::invalid_argument("fit_ensemble: fraction must be in (0, 1]");
  const Normalization norm = Normalization::of(targets);
  const std::size_t n = configs.size();
  const std::size_t draw = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(fraction * n)));

  BootstrapEnsemble ens;
  for (int m = 0; m < num_members; ++m) {
    std::uint64_t member_seed = resampling == Resampling::kIdentity ? seed : derive_seed(seed, "bootstrap", m);
    ens.member_seeds.push_back(member_seed);
    if (resampling == Resampling::kIdentity) {
      ens.members.push_back(TreeEnsembleModel::fit(encoder, configs, targets, params, norm));
      continue;
    }
    Rng rng(member_seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<ScheduleConfig> cs(draw);
    std::vector<double> ys(draw);
    for (std::size_t i = 0; i < draw; ++i) {
      std::size_t j = pick(rng);
      cs[i] = configs[j];
      ys[i] = targets[j];
    }
    ens.members.push_back(TreeEnsembleModel::fit(encoder, cs, ys, params, norm));
  }
  return ens;
}

inline double population_stddev(std::span<const double> v) {
  if (v.empty()) return 0.0;
  // Shifted by the first value so identical members give exactly zero.
  const double k = v.front();
  double sum = 0.0;
  for (double x : v) sum += x - k;
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - k - mean) * (x - k - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

// Sum of standard deviations (not variances) of the members' normalized time
// and energy predictions.
inline double uncertainty(const BootstrapEnsemble& time_ens, const BootstrapEnsemble& energy_ens,
                          const ScheduleConfig& x) {
  auto t = time_ens.predict_normalized(x);
  auto e = energy_ens.predict_normalized(x);
  return population_stddev(t) + population_stddev(e);
}

}  // namespace ecosched
