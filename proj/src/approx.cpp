#include "careerpath/approx.hpp"

#include <algorithm>
#include <cmath>

namespace careerpath {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Linear: return "linear";
    case Activation::Softmax: return "softmax";
  }
  return "linear";
}

Activation parse_activation(std::string_view text) {
  if (text == "tanh") return Activation::Tanh;
  if (text == "relu") return Activation::Relu;
  if (text == "linear") return Activation::Linear;
  if (text == "softmax") return Activation::Softmax;
  throw std::invalid_argument("unknown activation '" + std::string(text) + "'");
}

void MlpParams::fill(double v) {
  for (auto& w : weights) std::fill(w.begin(), w.end(), v);
  for (auto& b : biases) std::fill(b.begin(), b.end(), v);
}

void MlpParams::add_scaled(const MlpParams& other, double scale) {
  if (!same_shape(other)) throw std::invalid_argument("MlpParams: shape mismatch");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (std::size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += scale * other.weights[l][i];
    for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += scale * other.biases[l][i];
  }
}

bool MlpParams::all_finite() const {
  for (const auto& w : weights)
    for (double x : w)
      if (!std::isfinite(x)) return false;
  for (const auto& b : biases)
    for (double x : b)
      if (!std::isfinite(x)) return false;
  return true;
}

bool MlpParams::same_shape(const MlpParams& other) const {
  if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) return false;
  for (std::size_t l = 0; l < weights.size(); ++l)
    if (weights[l].size() != other.weights[l].size() || biases[l].size() != other.biases[l].size())
      return false;
  return true;
}

Mlp::Mlp(std::vector<std::size_t> dims, Activation hidden, Activation output)
    : dims_(std::move(dims)), hidden_(hidden), output_(output) {
  if (dims_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output sizes");
  for (auto d : dims_)
    if (d == 0) throw std::invalid_argument("Mlp: layer sizes must be positive");
  if (hidden_ == Activation::Softmax) throw std::invalid_argument("Mlp: softmax is output-only");
  params_ = zeros_like();
}

MlpParams Mlp::zeros_like() const {
  MlpParams p;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    p.weights.emplace_back(dims_[l + 1] * dims_[l], 0.0);
    p.biases.emplace_back(dims_[l + 1], 0.0);
  }
  return p;
}

Mlp Mlp::initialized(std::vector<std::size_t> dims, Activation hidden, Activation output, Rng& rng) {
  Mlp net(std::move(dims), hidden, output);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const double fan_in = static_cast<double>(net.dims_[l]);
    const double fan_out = static_cast<double>(net.dims_[l + 1]);
    const Activation act = l + 1 == net.layer_count() ? output : hidden;
    const double limit = act == Activation::Relu ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& w : net.params_.weights[l]) w = rng.uniform(-limit, limit);
  }
  return net;
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  MlpWorkspace ws(*this);
  auto out = ws.forward(*this, input);
  return {out.begin(), out.end()};
}

namespace {

void activate(Activation a, std::vector<double>& z) {
  switch (a) {
    case Activation::Tanh:
      for (auto& x : z) x = std::tanh(x);
      break;
    case Activation::Relu:
      for (auto& x : z) x = x > 0.0 ? x : 0.0;
      break;
    case Activation::Linear:
      break;
    case Activation::Softmax: {
      const double m = *std::max_element(z.begin(), z.end());
      double total = 0.0;
      for (auto& x : z) {
        x = std::exp(x - m);
        total += x;
      }
      for (auto& x : z) x /= total;
      break;
    }
  }
}

// Multiplies `delta` (dL/da) in place by da/dz, given the activation output a.
void through_activation(Activation act, const std::vector<double>& a, std::vector<double>& delta) {
  switch (act) {
    case Activation::Tanh:
      for (std::size_t i = 0; i < a.size(); ++i) delta[i] *= 1.0 - a[i] * a[i];
      break;
    case Activation::Relu:
      for (std::size_t i = 0; i < a.size(); ++i) delta[i] = a[i] > 0.0 ? delta[i] : 0.0;
      break;
    case Activation::Linear:
      break;
    case Activation::Softmax: {
      double dot = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) dot += delta[i] * a[i];
      for (std::size_t i = 0; i < a.size(); ++i) delta[i] = a[i] * (delta[i] - dot);
      break;
    }
  }
}

}  // namespace

MlpWorkspace::MlpWorkspace(const Mlp& net) {
  for (auto d : net.dims()) {
    act_.emplace_back(d, 0.0);
    delta_.emplace_back(d, 0.0);
  }
}

std::span<const double> MlpWorkspace::forward(const Mlp& net, std::span<const double> input) {
  if (input.size() != net.input_size())
    throw std::invalid_argument("Mlp::forward: input has " + std::to_string(input.size()) +
                                " values, expected " + std::to_string(net.input_size()));
  std::copy(input.begin(), input.end(), act_[0].begin());
  const auto& p = net.params();
  const std::size_t layers = net.layer_count();
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = net.dims()[l], out = net.dims()[l + 1];
    const auto& w = p.weights[l];
    const auto& b = p.biases[l];
    const auto& a = act_[l];
    auto& z = act_[l + 1];
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = w.data() + o * in;
      double s = b[o];
      for (std::size_t i = 0; i < in; ++i) s += row[i] * a[i];
      z[o] = s;
    }
    activate(l + 1 == layers ? net.output_activation() : net.hidden_activation(), z);
  }
  return act_.back();
}

double MlpWorkspace::backward(const Mlp& net, const LossSpec& loss, MlpParams& grads) {
  const std::size_t layers = net.layer_count();
  const auto& y = act_.back();
  auto& dz = delta_.back();
  std::fill(dz.begin(), dz.end(), 0.0);
  double value = 0.0;

  if (const auto* pg = std::get_if<PolicyGradientLoss>(&loss)) {
    if (net.output_activation() != Activation::Softmax)
      throw std::invalid_argument("policy-gradient loss needs a softmax head");
    if (pg->action >= y.size()) throw std::out_of_range("policy-gradient action out of range");
    double entropy = 0.0;
    for (double p : y)
      if (p > 0.0) entropy -= p * std::log(p);
    const double log_pa = std::log(std::max(y[pg->action], 1e-300));
    value = -pg->advantage * log_pa - pg->entropy_coef * entropy;
    // Closed form of d/dz through the softmax, stable for tiny probabilities.
    for (std::size_t j = 0; j < y.size(); ++j) {
      const double log_p = y[j] > 0.0 ? std::log(y[j]) : 0.0;
      dz[j] = -pg->advantage * ((j == pg->action ? 1.0 : 0.0) - y[j]) +
              pg->entropy_coef * y[j] * (log_p + entropy);
    }
  } else {
    std::size_t index = 0;
    double target = 0.0, weight = 1.0;
    if (const auto* se = std::get_if<SquaredErrorLoss>(&loss)) {
      index = se->index;
      target = se->target;
      weight = se->weight;
    } else {
      const auto& vr = std::get<ValueRegressionLoss>(loss);
      target = vr.target;
      weight = vr.weight;
    }
    if (index >= y.size()) throw std::out_of_range("squared-error output index out of range");
    const double err = y[index] - target;
    value = 0.5 * weight * err * err;
    dz[index] = weight * err;
    through_activation(net.output_activation(), y, dz);
  }

  if (!std::isfinite(value)) throw NumericalError("non-finite loss in backward pass");

  const auto& p = net.params();
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = net.dims()[l], out = net.dims()[l + 1];
    const auto& a = act_[l];
    const auto& d = delta_[l + 1];
    auto& gw = grads.weights[l];
    auto& gb = grads.biases[l];
    for (std::size_t o = 0; o < out; ++o) {
      const double g = d[o];
      if (g == 0.0) continue;
      double* row = gw.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) row[i] += g * a[i];
      gb[o] += g;
    }
    if (l == 0) break;
    auto& prev = delta_[l];
    std::fill(prev.begin(), prev.end(), 0.0);
    const auto& w = p.weights[l];
    for (std::size_t o = 0; o < out; ++o) {
      const double g = d[o];
      if (g == 0.0) continue;
      const double* row = w.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) prev[i] += row[i] * g;
    }
    through_activation(net.hidden_activation(), a, prev);
    for (double v : prev)
      if (!std::isfinite(v)) throw NumericalError("non-finite gradient in backward pass");
  }
  return value;
}

GradResult grad(const Mlp& net, std::span<const double> input, const LossSpec& loss) {
  MlpWorkspace ws(net);
  ws.forward(net, input);
  GradResult out;
  out.grads = net.zeros_like();
  out.loss = ws.backward(net, loss, out.grads);
  if (!out.grads.all_finite()) throw NumericalError("non-finite gradient");
  return out;
}

AdamState AdamState::for_net(const Mlp& net, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  s.m = net.zeros_like();
  s.v = net.zeros_like();
  return s;
}

void adam_step(Mlp& net, const MlpParams& grads, AdamState& state) {
  auto& p = net.params();
  if (!p.same_shape(grads) || !p.same_shape(state.m) || !p.same_shape(state.v))
    throw std::invalid_argument("adam_step: shape mismatch");
  if (!grads.all_finite()) throw NumericalError("adam_step: non-finite gradient");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  auto update = [&](std::vector<double>& theta, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      theta[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  };
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    update(p.weights[l], grads.weights[l], state.m.weights[l], state.v.weights[l]);
    update(p.biases[l], grads.biases[l], state.m.biases[l], state.v.biases[l]);
  }
}

}  // namespace careerpath
