#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specloc/rng.hpp"

namespace specloc {

enum class Activation { relu, tanh, identity, sigmoid };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Row-major dense matrix, just enough for single-sample nets.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  bool operator==(const Matrix&) const = default;
};

// Fully connected network. weights[l] maps layer l (cols = layer_sizes[l])
// to layer l+1 (rows = layer_sizes[l+1]). Hidden layers share one
// activation; dropout_p holds one drop probability per hidden layer.
// Values are immutable snapshots as far as training is concerned: the
// optimizer produces updated copies through adam_step on a mutable working
// net owned by the caller.
struct DenseNet {
  std::vector<int> layer_sizes;
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
  Activation hidden_activation = Activation::relu;
  Activation output_activation = Activation::identity;
  std::vector<double> dropout_p;

  std::size_t num_transforms() const { return weights.size(); }
  std::size_t num_hidden() const {
    return layer_sizes.size() >= 2 ? layer_sizes.size() - 2 : 0;
  }
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  bool operator==(const DenseNet&) const = default;
};

// He-uniform bound sqrt(6/fan_in) for relu-activated layers,
// Xavier-uniform sqrt(6/(fan_in+fan_out)) otherwise; biases start at zero.
// Weights are drawn layer by layer in row-major element order, so a seed
// fully determines the parameters.
DenseNet init_net(const std::vector<int>& layer_sizes, Activation hidden,
                  Activation output, const std::vector<double>& dropout_p,
                  std::uint64_t seed);
DenseNet init_net(const std::vector<int>& layer_sizes, Activation hidden,
                  Activation output, double dropout_p, std::uint64_t seed);

// Everything backward() needs: per-layer inputs, pre-activations, and the
// dropout mask scales (0 for dropped units, 1/(1-p) for kept ones).
struct ForwardCache {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> preacts;
  std::vector<std::vector<double>> mask_scales;
  std::vector<double> output;
};

// Eval mode: no dropout, no scaling; a pure deterministic function.
ForwardCache forward_eval(const DenseNet& net, const std::vector<double>& x);

// Train mode draws inverted-dropout masks from rng (hidden layer by hidden
// layer, unit order), so eval output equals the expectation of train
// output.
ForwardCache forward_train(const DenseNet& net, const std::vector<double>& x,
                           Rng& rng);

// Re-runs the forward pass under fixed masks (shape: one vector per hidden
// layer of 0 / (1-p)^-1 scales). The finite-difference oracle uses this to
// probe the same composed function the analytic gradients differentiate.
ForwardCache forward_with_masks(
    const DenseNet& net, const std::vector<double>& x,
    const std::vector<std::vector<double>>& mask_scales);

struct Gradients {
  std::vector<Matrix> dw;
  std::vector<std::vector<double>> db;
  std::vector<double> dinput;

  static Gradients zeros_like(const DenseNet& net);
  void add(const Gradients& other);
  void scale(double factor);
};

// Exact reverse-mode gradients of the cached forward pass, including the
// dropout masks. ReLU's subgradient at 0 is taken as 0.
Gradients backward(const DenseNet& net, const ForwardCache& cache,
                   const std::vector<double>& dloss_doutput);

struct LossResult {
  double value = 0.0;
  std::vector<double> grad;
};

// Mean over components of the squared difference.
LossResult mse_loss(const std::vector<double>& pred,
                    const std::vector<double>& target);

// Binary cross-entropy from logits in the numerically stable form
// max(z,0) - z*y + log(1+exp(-|z|)), averaged over components.
LossResult bce_loss_logits(const std::vector<double>& logits,
                           const std::vector<double>& labels);

// Convenience for probability inputs, which must lie in (0, 1).
LossResult bce_loss_prob(const std::vector<double>& probs,
                         const std::vector<double>& labels);

struct AdamState {
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<Matrix> m_w, v_w;
  std::vector<std::vector<double>> m_b, v_b;

  static AdamState for_net(const DenseNet& net, double lr = 1e-3);
};

// Standard bias-corrected Adam update, in place.
void adam_step(DenseNet& net, const Gradients& grads, AdamState& state);

// JSON model artifact with a format-version field; the round trip is
// bit-exact on all parameters.
std::string net_to_json_text(const DenseNet& net);
DenseNet net_from_json_text(const std::string& text);
void save_net(const DenseNet& net, const std::string& path);
DenseNet load_net(const std::string& path);

}  // namespace specloc
