#include "careerpath/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "careerpath/rng.hpp"

namespace careerpath {

void FeatureMatrix::push_row(std::span<const double> values) {
  if (values.size() != cols_) throw std::invalid_argument("FeatureMatrix: row width mismatch");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

void ForestParams::validate() const {
  if (n_trees < 1) throw std::invalid_argument("forest.n_trees must be at least 1");
  if (max_depth < 1) throw std::invalid_argument("forest.max_depth must be at least 1");
  if (min_samples_leaf < 1) throw std::invalid_argument("forest.min_samples_leaf must be at least 1");
}

double DecisionTree::predict(std::span<const double> row) const {
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes_[i].value;
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::size_t best = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    const auto& n = nodes_[i];
    if (n.feature < 0) {
      best = std::max(best, d);
      continue;
    }
    stack.push_back({static_cast<std::size_t>(n.left), d + 1});
    stack.push_back({static_cast<std::size_t>(n.right), d + 1});
  }
  return best;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
}

namespace {

void check_row(std::span<const double> row, std::size_t n_features) {
  if (row.size() != n_features)
    throw std::invalid_argument("forest: row has " + std::to_string(row.size()) +
                                " features, model expects " + std::to_string(n_features));
}

// Grows one CART tree minimizing within-node squared error. On 0/1 targets the
// decrease in squared error is proportional to the decrease in Gini impurity,
// so the same builder serves both tasks.
class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const double> y, const ForestParams& params,
              std::size_t features_per_split, Rng rng)
      : x_(x), y_(y), params_(params), mtry_(features_per_split), rng_(std::move(rng)) {}

  DecisionTree build(std::vector<std::size_t> sample) {
    nodes_.clear();
    grow(sample, 0, sample.size(), 0);
    return DecisionTree(std::move(nodes_));
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    std::size_t left_count = 0;
  };

  int grow(std::vector<std::size_t>& idx, std::size_t begin, std::size_t end, std::size_t depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const std::size_t n = end - begin;

    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      sum += y_[idx[k]];
      sum_sq += y_[idx[k]] * y_[idx[k]];
    }
    const double mean = sum / static_cast<double>(n);
    const double sse = std::max(0.0, sum_sq - sum * mean);
    nodes_[static_cast<std::size_t>(id)].value = mean;
    nodes_[static_cast<std::size_t>(id)].samples = n;

    if (depth >= params_.max_depth || n < 2 * params_.min_samples_leaf || sse <= 1e-12 * n) return id;

    Split best = find_split(idx, begin, end, sum, sse);
    if (best.feature < 0) return id;

    const auto f = static_cast<std::size_t>(best.feature);
    auto mid = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                              idx.begin() + static_cast<std::ptrdiff_t>(end),
                              [&](std::size_t r) { return x_.at(r, f) <= best.threshold; });
    const auto split_at = static_cast<std::size_t>(mid - idx.begin());

    const int left = grow(idx, begin, split_at, depth + 1);
    const int right = grow(idx, split_at, end, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  Split find_split(const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end,
                   double total_sum, double parent_sse) {
    const std::size_t d = x_.cols();
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), 0);
    rng_.shuffle(features);

    const std::size_t n = end - begin;
    const std::size_t min_leaf = params_.min_samples_leaf;
    Split best;
    std::vector<std::pair<double, double>> column(n);

    // Sample mtry features; keep drawing past mtry only while nothing splits.
    for (std::size_t k = 0; k < d; ++k) {
      if (k >= mtry_ && best.feature >= 0) break;
      const std::size_t f = features[k];
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = idx[begin + i];
        column[i] = {x_.at(r, f), y_[r]};
      }
      std::sort(column.begin(), column.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (column.front().first == column.back().first) continue;

      double left_sum = 0.0, left_sq = 0.0, total_sq = 0.0;
      for (const auto& c : column) total_sq += c.second * c.second;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += column[i].second;
        left_sq += column[i].second * column[i].second;
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        if (column[i].first == column[i + 1].first) continue;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double right_sum = total_sum - left_sum;
        const double right_sq = total_sq - left_sq;
        const double sse_l = left_sq - left_sum * left_sum / static_cast<double>(nl);
        const double sse_r = right_sq - right_sum * right_sum / static_cast<double>(nr);
        const double gain = parent_sse - sse_l - sse_r;
        if (gain > best.gain + 1e-12 * std::max(1.0, parent_sse)) {
          best.gain = gain;
          best.feature = static_cast<int>(f);
          const double lo = column[i].first, hi = column[i + 1].first;
          best.threshold = lo + (hi - lo) / 2.0;
          if (!(best.threshold < hi)) best.threshold = lo;
          best.left_count = nl;
        }
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  std::span<const double> y_;
  const ForestParams& params_;
  std::size_t mtry_;
  Rng rng_;
  std::vector<DecisionTree::Node> nodes_;
};

std::vector<DecisionTree> grow_forest(const FeatureMatrix& x, std::span<const double> y,
                                      const ForestParams& params, std::size_t mtry) {
  params.validate();
  if (x.empty()) throw std::invalid_argument("forest: empty training set");
  if (y.size() != x.rows()) throw std::invalid_argument("forest: target length mismatch");
  for (double v : y)
    if (!std::isfinite(v)) throw std::invalid_argument("forest: non-finite target");
  mtry = std::clamp<std::size_t>(mtry, 1, x.cols());

  std::vector<DecisionTree> trees(params.n_trees);
  auto fit_one = [&](std::size_t t) {
    Rng rng(Rng::derive(params.seed, t));
    std::vector<std::size_t> sample(x.rows());
    if (params.bootstrap) {
      for (auto& s : sample) s = rng.index(x.rows());
    } else {
      std::iota(sample.begin(), sample.end(), 0);
    }
    trees[t] = TreeBuilder(x, y, params, mtry, std::move(rng)).build(std::move(sample));
  };

  // Each tree owns a seed derived from its index, so scheduling cannot change results.
  const std::size_t workers =
      std::min<std::size_t>(params.n_trees, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t t = 0; t < params.n_trees; ++t) fit_one(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < params.n_trees; t = next++) fit_one(t);
      });
  }
  return trees;
}

}  // namespace

double ForestClassifier::predict_proba(std::span<const double> row) const {
  check_row(row, n_features_);
  double total = 0.0;
  for (const auto& t : trees_) total += t.predict(row);
  return std::clamp(total / static_cast<double>(trees_.size()), 0.0, 1.0);
}

double ForestRegressor::predict_value(std::span<const double> row) const {
  check_row(row, n_features_);
  double total = 0.0;
  for (const auto& t : trees_) total += t.predict(row);
  return total / static_cast<double>(trees_.size());
}

ForestClassifier fit_classifier(const FeatureMatrix& rows, std::span<const int> labels,
                                const ForestParams& params) {
  std::vector<double> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("fit_classifier: labels must be 0/1");
    y[i] = labels[i];
  }
  const std::size_t mtry = params.features_per_split
                               ? params.features_per_split
                               : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(rows.cols()))));
  return ForestClassifier(grow_forest(rows, y, params, mtry), params, rows.cols());
}

ForestRegressor fit_regressor(const FeatureMatrix& rows, std::span<const double> targets,
                              const ForestParams& params) {
  const std::size_t mtry = params.features_per_split ? params.features_per_split
                                                     : (rows.cols() + 2) / 3;
  return ForestRegressor(grow_forest(rows, targets, params, mtry), params, rows.cols());
}

}  // namespace careerpath
