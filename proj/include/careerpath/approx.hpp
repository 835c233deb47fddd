#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

#include "careerpath/rng.hpp"

namespace careerpath {

enum class Activation { Tanh, Relu, Linear, Softmax };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view text);

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameter-shaped buffers. weights[i] is (dims[i+1] x dims[i]) row-major.
struct MlpParams {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  void fill(double v);
  void add_scaled(const MlpParams& other, double scale);
  bool all_finite() const;
  bool same_shape(const MlpParams& other) const;
};

class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<std::size_t> dims, Activation hidden, Activation output);

  // Uniform Xavier (tanh/linear/softmax) or He (relu) initialization.
  static Mlp initialized(std::vector<std::size_t> dims, Activation hidden, Activation output, Rng& rng);

  std::vector<double> forward(std::span<const double> input) const;

  const std::vector<std::size_t>& dims() const { return dims_; }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }
  std::size_t input_size() const { return dims_.front(); }
  std::size_t output_size() const { return dims_.back(); }
  std::size_t layer_count() const { return dims_.size() - 1; }

  MlpParams& params() { return params_; }
  const MlpParams& params() const { return params_; }
  MlpParams zeros_like() const;

 private:
  friend class MlpWorkspace;
  std::vector<std::size_t> dims_;
  Activation hidden_ = Activation::Tanh;
  Activation output_ = Activation::Linear;
  MlpParams params_;
};

// 0.5 * weight * (y[index] - target)^2
struct SquaredErrorLoss {
  std::size_t index = 0;
  double target = 0.0;
  double weight = 1.0;
};

// -advantage * log pi(action) - entropy_coef * H(pi), on a softmax head.
struct PolicyGradientLoss {
  std::size_t action = 0;
  double advantage = 0.0;
  double entropy_coef = 0.0;
};

// 0.5 * weight * (y[0] - target)^2 on a single-output head.
struct ValueRegressionLoss {
  double target = 0.0;
  double weight = 1.0;
};

using LossSpec = std::variant<SquaredErrorLoss, PolicyGradientLoss, ValueRegressionLoss>;

// Reusable activations buffer for forward/backward passes.
class MlpWorkspace {
 public:
  explicit MlpWorkspace(const Mlp& net);

  std::span<const double> forward(const Mlp& net, std::span<const double> input);
  // Accumulates d(loss)/d(params) into `grads`; returns the loss. Requires a
  // preceding forward() on the same input.
  double backward(const Mlp& net, const LossSpec& loss, MlpParams& grads);

 private:
  std::vector<std::vector<double>> act_;  // act_[0] = input, act_[L] = output
  std::vector<std::vector<double>> delta_;
};

struct GradResult {
  double loss = 0.0;
  MlpParams grads;
};

GradResult grad(const Mlp& net, std::span<const double> input, const LossSpec& loss);

struct AdamState {
  std::size_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  MlpParams m;
  MlpParams v;

  static AdamState for_net(const Mlp& net, double learning_rate = 1e-3);
};

void adam_step(Mlp& net, const MlpParams& grads, AdamState& state);

}  // namespace careerpath
