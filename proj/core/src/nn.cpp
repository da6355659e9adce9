#include "specloc/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace specloc {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
    case Activation::identity:
      return "identity";
    case Activation::sigmoid:
      return "sigmoid";
  }
  return "unknown";
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  if (name == "sigmoid") return Activation::sigmoid;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

namespace {

double apply_activation(Activation a, double z) {
  switch (a) {
    case Activation::relu:
      return z > 0.0 ? z : 0.0;
    case Activation::tanh:
      return std::tanh(z);
    case Activation::identity:
      return z;
    case Activation::sigmoid:
      return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

// Derivative in terms of the pre-activation z. ReLU'(0) = 0 by convention.
double activation_derivative(Activation a, double z) {
  switch (a) {
    case Activation::relu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::identity:
      return 1.0;
    case Activation::sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

void check_net_shapes(const DenseNet& net) {
  if (net.layer_sizes.size() < 2) {
    throw std::invalid_argument("network needs at least 2 layers");
  }
  if (net.weights.size() != net.layer_sizes.size() - 1 ||
      net.biases.size() != net.weights.size()) {
    throw std::invalid_argument("weight/bias count does not chain");
  }
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const auto in = static_cast<std::size_t>(net.layer_sizes[l]);
    const auto out = static_cast<std::size_t>(net.layer_sizes[l + 1]);
    if (net.weights[l].rows != out || net.weights[l].cols != in ||
        net.biases[l].size() != out) {
      throw std::invalid_argument("layer " + std::to_string(l) +
                                  " shape mismatch");
    }
  }
  if (net.dropout_p.size() != net.num_hidden()) {
    throw std::invalid_argument("dropout list length must equal hidden layers");
  }
  for (double p : net.dropout_p) {
    if (!(p >= 0.0 && p < 1.0)) {
      throw std::invalid_argument("dropout probability must be in [0, 1)");
    }
  }
}

ForwardCache run_forward(const DenseNet& net, const std::vector<double>& x,
                         const std::vector<std::vector<double>>* fixed_masks,
                         Rng* rng) {
  if (x.size() != static_cast<std::size_t>(net.input_size())) {
    throw std::invalid_argument("input size mismatch");
  }
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("non-finite network input");
    }
  }
  const std::size_t transforms = net.num_transforms();
  ForwardCache cache;
  cache.inputs.resize(transforms);
  cache.preacts.resize(transforms);
  cache.mask_scales.resize(net.num_hidden());

  std::vector<double> activ = x;
  for (std::size_t l = 0; l < transforms; ++l) {
    cache.inputs[l] = activ;
    const Matrix& w = net.weights[l];
    std::vector<double> z(w.rows);
    for (std::size_t r = 0; r < w.rows; ++r) {
      const double* wrow = &w.data[r * w.cols];
      double acc = net.biases[l][r];
      for (std::size_t c = 0; c < w.cols; ++c) acc += wrow[c] * activ[c];
      z[r] = acc;
    }
    cache.preacts[l] = z;
    const bool is_output = (l + 1 == transforms);
    const Activation act =
        is_output ? net.output_activation : net.hidden_activation;
    activ.resize(z.size());
    for (std::size_t r = 0; r < z.size(); ++r) {
      activ[r] = apply_activation(act, z[r]);
    }
    if (!is_output) {
      const double p = net.dropout_p[l];
      if (fixed_masks != nullptr) {
        cache.mask_scales[l] = (*fixed_masks)[l];
      } else if (rng != nullptr && p > 0.0) {
        // Inverted dropout: kept units are scaled by 1/(1-p) at train time.
        std::vector<double> mask(z.size());
        const double keep_scale = 1.0 / (1.0 - p);
        for (std::size_t r = 0; r < mask.size(); ++r) {
          mask[r] = rng->uniform01() < p ? 0.0 : keep_scale;
        }
        cache.mask_scales[l] = std::move(mask);
      } else {
        cache.mask_scales[l].assign(z.size(), 1.0);
      }
      const auto& mask = cache.mask_scales[l];
      if (mask.size() != activ.size()) {
        throw std::invalid_argument("dropout mask shape mismatch");
      }
      for (std::size_t r = 0; r < activ.size(); ++r) activ[r] *= mask[r];
    }
  }
  for (double v : activ) {
    if (!std::isfinite(v)) {
      throw std::runtime_error("non-finite network output");
    }
  }
  cache.output = std::move(activ);
  return cache;
}

}  // namespace

DenseNet init_net(const std::vector<int>& layer_sizes, Activation hidden,
                  Activation output, const std::vector<double>& dropout_p,
                  std::uint64_t seed) {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("network needs at least 2 layers");
  }
  for (int s : layer_sizes) {
    if (s < 1) throw std::invalid_argument("layer sizes must be >= 1");
  }
  if (hidden != Activation::relu && hidden != Activation::tanh) {
    throw std::invalid_argument("hidden activation must be relu or tanh");
  }
  DenseNet net;
  net.layer_sizes = layer_sizes;
  net.hidden_activation = hidden;
  net.output_activation = output;
  net.dropout_p = dropout_p;

  Rng rng(seed);
  const std::size_t transforms = layer_sizes.size() - 1;
  net.weights.reserve(transforms);
  net.biases.reserve(transforms);
  for (std::size_t l = 0; l < transforms; ++l) {
    const auto fan_in = static_cast<double>(layer_sizes[l]);
    const auto fan_out = static_cast<double>(layer_sizes[l + 1]);
    const Activation act = (l + 1 == transforms) ? output : hidden;
    const double bound = act == Activation::relu
                             ? std::sqrt(6.0 / fan_in)
                             : std::sqrt(6.0 / (fan_in + fan_out));
    Matrix w(static_cast<std::size_t>(layer_sizes[l + 1]),
             static_cast<std::size_t>(layer_sizes[l]));
    for (double& v : w.data) v = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(static_cast<std::size_t>(layer_sizes[l + 1]), 0.0);
  }
  check_net_shapes(net);
  return net;
}

DenseNet init_net(const std::vector<int>& layer_sizes, Activation hidden,
                  Activation output, double dropout_p, std::uint64_t seed) {
  const std::size_t hidden_count =
      layer_sizes.size() >= 2 ? layer_sizes.size() - 2 : 0;
  return init_net(layer_sizes, hidden, output,
                  std::vector<double>(hidden_count, dropout_p), seed);
}

ForwardCache forward_eval(const DenseNet& net, const std::vector<double>& x) {
  check_net_shapes(net);
  return run_forward(net, x, nullptr, nullptr);
}

ForwardCache forward_train(const DenseNet& net, const std::vector<double>& x,
                           Rng& rng) {
  check_net_shapes(net);
  return run_forward(net, x, nullptr, &rng);
}

ForwardCache forward_with_masks(
    const DenseNet& net, const std::vector<double>& x,
    const std::vector<std::vector<double>>& mask_scales) {
  check_net_shapes(net);
  if (mask_scales.size() != net.num_hidden()) {
    throw std::invalid_argument("mask count must equal hidden layers");
  }
  return run_forward(net, x, &mask_scales, nullptr);
}

Gradients Gradients::zeros_like(const DenseNet& net) {
  Gradients g;
  g.dw.reserve(net.weights.size());
  g.db.reserve(net.biases.size());
  for (const auto& w : net.weights) g.dw.emplace_back(w.rows, w.cols);
  for (const auto& b : net.biases) g.db.emplace_back(b.size(), 0.0);
  g.dinput.assign(static_cast<std::size_t>(net.input_size()), 0.0);
  return g;
}

void Gradients::add(const Gradients& other) {
  for (std::size_t l = 0; l < dw.size(); ++l) {
    for (std::size_t i = 0; i < dw[l].data.size(); ++i) {
      dw[l].data[i] += other.dw[l].data[i];
    }
    for (std::size_t i = 0; i < db[l].size(); ++i) db[l][i] += other.db[l][i];
  }
  for (std::size_t i = 0; i < dinput.size(); ++i) dinput[i] += other.dinput[i];
}

void Gradients::scale(double factor) {
  for (auto& w : dw) {
    for (double& v : w.data) v *= factor;
  }
  for (auto& b : db) {
    for (double& v : b) v *= factor;
  }
  for (double& v : dinput) v *= factor;
}

Gradients backward(const DenseNet& net, const ForwardCache& cache,
                   const std::vector<double>& dloss_doutput) {
  check_net_shapes(net);
  const std::size_t transforms = net.num_transforms();
  if (cache.inputs.size() != transforms ||
      dloss_doutput.size() != cache.output.size()) {
    throw std::invalid_argument("cache does not match network");
  }
  Gradients g = Gradients::zeros_like(net);
  std::vector<double> delta = dloss_doutput;
  for (std::size_t l = transforms; l-- > 0;) {
    const bool is_output = (l + 1 == transforms);
    const Activation act =
        is_output ? net.output_activation : net.hidden_activation;
    if (!is_output) {
      // Undo the dropout scaling applied after this layer's activation.
      const auto& mask = cache.mask_scales[l];
      for (std::size_t r = 0; r < delta.size(); ++r) delta[r] *= mask[r];
    }
    const auto& z = cache.preacts[l];
    for (std::size_t r = 0; r < delta.size(); ++r) {
      delta[r] *= activation_derivative(act, z[r]);
    }
    const auto& input = cache.inputs[l];
    Matrix& dw = g.dw[l];
    for (std::size_t r = 0; r < dw.rows; ++r) {
      const double dr = delta[r];
      double* out = &dw.data[r * dw.cols];
      for (std::size_t c = 0; c < dw.cols; ++c) out[c] = dr * input[c];
      g.db[l][r] = dr;
    }
    const Matrix& w = net.weights[l];
    std::vector<double> prev(w.cols, 0.0);
    for (std::size_t r = 0; r < w.rows; ++r) {
      const double dr = delta[r];
      const double* wrow = &w.data[r * w.cols];
      for (std::size_t c = 0; c < w.cols; ++c) prev[c] += dr * wrow[c];
    }
    delta = std::move(prev);
  }
  g.dinput = std::move(delta);
  return g;
}

LossResult mse_loss(const std::vector<double>& pred,
                    const std::vector<double>& target) {
  if (pred.size() != target.size() || pred.empty()) {
    throw std::invalid_argument("mse_loss: size mismatch");
  }
  LossResult res;
  res.grad.resize(pred.size());
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!std::isfinite(pred[i]) || !std::isfinite(target[i])) {
      throw std::invalid_argument("mse_loss: non-finite input");
    }
    const double diff = pred[i] - target[i];
    res.value += diff * diff / n;
    res.grad[i] = 2.0 * diff / n;
  }
  return res;
}

LossResult bce_loss_logits(const std::vector<double>& logits,
                           const std::vector<double>& labels) {
  if (logits.size() != labels.size() || logits.empty()) {
    throw std::invalid_argument("bce_loss: size mismatch");
  }
  LossResult res;
  res.grad.resize(logits.size());
  const double n = static_cast<double>(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    const double y = labels[i];
    if (!std::isfinite(z) || !std::isfinite(y)) {
      throw std::invalid_argument("bce_loss: non-finite input");
    }
    res.value +=
        (std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)))) / n;
    const double sig = 1.0 / (1.0 + std::exp(-z));
    res.grad[i] = (sig - y) / n;
  }
  return res;
}

LossResult bce_loss_prob(const std::vector<double>& probs,
                         const std::vector<double>& labels) {
  if (probs.size() != labels.size() || probs.empty()) {
    throw std::invalid_argument("bce_loss: size mismatch");
  }
  LossResult res;
  res.grad.resize(probs.size());
  const double n = static_cast<double>(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    const double y = labels[i];
    if (!(p > 0.0 && p < 1.0)) {
      throw std::invalid_argument("bce_loss: probability outside (0, 1)");
    }
    res.value += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p)) / n;
    res.grad[i] = (p - y) / (p * (1.0 - p)) / n;
  }
  return res;
}

AdamState AdamState::for_net(const DenseNet& net, double lr) {
  AdamState st;
  st.lr = lr;
  for (const auto& w : net.weights) {
    st.m_w.emplace_back(w.rows, w.cols);
    st.v_w.emplace_back(w.rows, w.cols);
  }
  for (const auto& b : net.biases) {
    st.m_b.emplace_back(b.size(), 0.0);
    st.v_b.emplace_back(b.size(), 0.0);
  }
  return st;
}

namespace {

void adam_update(double& param, double g, double& m, double& v,
                 const AdamState& st, double corr1, double corr2) {
  m = st.beta1 * m + (1.0 - st.beta1) * g;
  v = st.beta2 * v + (1.0 - st.beta2) * g * g;
  const double m_hat = m / corr1;
  const double v_hat = v / corr2;
  param -= st.lr * m_hat / (std::sqrt(v_hat) + st.eps);
}

}  // namespace

void adam_step(DenseNet& net, const Gradients& grads, AdamState& state) {
  if (state.m_w.size() != net.weights.size() ||
      grads.dw.size() != net.weights.size()) {
    throw std::invalid_argument("adam state/gradient shape mismatch");
  }
  state.step += 1;
  const double corr1 = 1.0 - std::pow(state.beta1, state.step);
  const double corr2 = 1.0 - std::pow(state.beta2, state.step);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    if (grads.dw[l].rows != net.weights[l].rows ||
        grads.dw[l].cols != net.weights[l].cols) {
      throw std::invalid_argument("adam gradient shape mismatch");
    }
    for (std::size_t i = 0; i < net.weights[l].data.size(); ++i) {
      adam_update(net.weights[l].data[i], grads.dw[l].data[i],
                  state.m_w[l].data[i], state.v_w[l].data[i], state, corr1,
                  corr2);
    }
    for (std::size_t i = 0; i < net.biases[l].size(); ++i) {
      adam_update(net.biases[l][i], grads.db[l][i], state.m_b[l][i],
                  state.v_b[l][i], state, corr1, corr2);
    }
  }
}

namespace {

constexpr int kNetFormatVersion = 1;

nlohmann::json net_to_json(const DenseNet& net) {
  nlohmann::json j;
  j["format_version"] = kNetFormatVersion;
  j["layer_sizes"] = net.layer_sizes;
  j["hidden_activation"] = activation_name(net.hidden_activation);
  j["output_activation"] = activation_name(net.output_activation);
  j["dropout_p"] = net.dropout_p;
  nlohmann::json weights = nlohmann::json::array();
  for (const auto& w : net.weights) weights.push_back(w.data);
  j["weights"] = std::move(weights);
  j["biases"] = net.biases;
  return j;
}

DenseNet net_from_json(const nlohmann::json& j) {
  if (j.at("format_version").get<int>() != kNetFormatVersion) {
    throw std::runtime_error("unsupported model format version");
  }
  DenseNet net;
  net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  net.hidden_activation =
      activation_from_name(j.at("hidden_activation").get<std::string>());
  net.output_activation =
      activation_from_name(j.at("output_activation").get<std::string>());
  net.dropout_p = j.at("dropout_p").get<std::vector<double>>();
  const auto& weights = j.at("weights");
  for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    Matrix w(static_cast<std::size_t>(net.layer_sizes[l + 1]),
             static_cast<std::size_t>(net.layer_sizes[l]));
    w.data = weights.at(l).get<std::vector<double>>();
    if (w.data.size() != w.rows * w.cols) {
      throw std::runtime_error("weight array size mismatch in artifact");
    }
    net.weights.push_back(std::move(w));
  }
  net.biases = j.at("biases").get<std::vector<std::vector<double>>>();
  check_net_shapes(net);
  return net;
}

}  // namespace

std::string net_to_json_text(const DenseNet& net) {
  return net_to_json(net).dump(2);
}

DenseNet net_from_json_text(const std::string& text) {
  return net_from_json(nlohmann::json::parse(text));
}

void save_net(const DenseNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << net_to_json_text(net) << '\n';
}

DenseNet load_net(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return net_from_json_text(buf.str());
}

}  // namespace specloc
