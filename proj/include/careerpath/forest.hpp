#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace careerpath {

// Dense row-major feature matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::size_t cols) : cols_(cols) {}
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  void push_row(std::span<const double> values);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline constexpr std::size_t kUnlimitedDepth = std::numeric_limits<std::size_t>::max();

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 12;  // kUnlimitedDepth for fully grown trees
  std::size_t min_samples_leaf = 5;
  // 0 selects the task default: ceil(sqrt(d)) for classification, ceil(d/3) for regression.
  std::size_t features_per_split = 0;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

// Flat CART tree. A node with feature < 0 is a leaf whose value is the leaf's
// mean target (the positive fraction for 0/1 labels).
class DecisionTree {
 public:
  struct Node {
    int feature = -1;
    double threshold = 0.0;  // rows with x[feature] <= threshold go left
    int left = -1;
    int right = -1;
    double value = 0.0;
    std::size_t samples = 0;
  };

  DecisionTree() = default;
  explicit DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> row) const;
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t depth() const;
  std::size_t leaf_count() const;

 private:
  std::vector<Node> nodes_;
};

class ForestClassifier {
 public:
  ForestClassifier() = default;
  ForestClassifier(std::vector<DecisionTree> trees, ForestParams params, std::size_t n_features)
      : trees_(std::move(trees)), params_(params), n_features_(n_features) {}

  // Mean positive-class fraction over trees, in [0, 1].
  double predict_proba(std::span<const double> row) const;

  const std::vector<DecisionTree>& trees() const { return trees_; }
  const ForestParams& params() const { return params_; }
  std::size_t n_features() const { return n_features_; }

 private:
  std::vector<DecisionTree> trees_;
  ForestParams params_;
  std::size_t n_features_ = 0;
};

class ForestRegressor {
 public:
  ForestRegressor() = default;
  ForestRegressor(std::vector<DecisionTree> trees, ForestParams params, std::size_t n_features)
      : trees_(std::move(trees)), params_(params), n_features_(n_features) {}

  double predict_value(std::span<const double> row) const;

  const std::vector<DecisionTree>& trees() const { return trees_; }
  const ForestParams& params() const { return params_; }
  std::size_t n_features() const { return n_features_; }

 private:
  std::vector<DecisionTree> trees_;
  ForestParams params_;
  std::size_t n_features_ = 0;
};

// Gini-impurity forest over binary labels (0/1).
ForestClassifier fit_classifier(const FeatureMatrix& rows, std::span<const int> labels,
                                const ForestParams& params);

// Variance-reduction forest.
ForestRegressor fit_regressor(const FeatureMatrix& rows, std::span<const double> targets,
                              const ForestParams& params);

inline double predict_proba(const ForestClassifier& m, std::span<const double> row) {
  return m.predict_proba(row);
}
inline double predict_value(const ForestRegressor& m, std::span<const double> row) {
  return m.predict_value(row);
}

}  // namespace careerpath
