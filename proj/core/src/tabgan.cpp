#include "specloc/tabgan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "specloc/numfmt.hpp"

namespace specloc {

namespace {

constexpr std::uint64_t kGenInitSalt = 0xA0761D6478BD642Full;
constexpr std::uint64_t kDiscInitSalt = 0xE7037ED1A0B428DBull;
constexpr std::uint64_t kLoopSalt = 0x8EBC6AF09C88C6E3ull;
constexpr std::uint64_t kHoldoutSalt = 0x589965CC75374CC3ull;

}  // namespace

ChannelScaler ChannelScaler::fit(const std::vector<Spectrum>& spectra) {
  if (spectra.empty()) {
    throw std::invalid_argument("cannot fit scaler on empty data");
  }
  ChannelScaler sc;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    sc.min[c] = sc.max[c] = spectra.front()[c];
  }
  for (const auto& s : spectra) {
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      sc.min[c] = std::min(sc.min[c], s[c]);
      sc.max[c] = std::max(sc.max[c], s[c]);
    }
  }
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    sc.degenerate[c] = sc.max[c] == sc.min[c];
  }
  return sc;
}

std::vector<double> ChannelScaler::forward(const Spectrum& s) const {
  std::vector<double> out(kNumChannels);
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    out[c] = degenerate[c]
                 ? 0.0
                 : 2.0 * (s[c] - min[c]) / (max[c] - min[c]) - 1.0;
  }
  return out;
}

Spectrum ChannelScaler::inverse(const std::vector<double>& scaled) const {
  if (scaled.size() != kNumChannels) {
    throw std::invalid_argument("scaled vector must have 11 entries");
  }
  Spectrum s;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    s[c] = degenerate[c]
               ? min[c]
               : min[c] + (scaled[c] + 1.0) * 0.5 * (max[c] - min[c]);
  }
  return s;
}

GanTrainResult train_gan(const std::vector<Spectrum>& spectra,
                         const GanConfig& cfg) {
  if (cfg.latent_dim < 1 || cfg.batch < 1 || cfg.epochs < 1 ||
      cfg.lr_g <= 0 || cfg.lr_d <= 0 ||
      !(cfg.ema_decay >= 0.0 && cfg.ema_decay < 1.0)) {
    throw std::invalid_argument("invalid GAN config");
  }
  for (int w : cfg.gen_widths) {
    if (w < 1) throw std::invalid_argument("generator widths must be >= 1");
  }
  for (int w : cfg.disc_widths) {
    if (w < 1) throw std::invalid_argument("discriminator widths must be >= 1");
  }
  if (spectra.size() < 2 * static_cast<std::size_t>(cfg.batch)) {
    throw std::invalid_argument(
        "need at least 2*batch spectra to train the GAN");
  }
  for (const auto& s : spectra) validate_spectrum(s, /*check_adc=*/false);

  // Hold back 10% of the real spectra for discriminator monitoring.
  std::vector<std::size_t> order(spectra.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng holdout_rng(cfg.seed ^ kHoldoutSalt);
  holdout_rng.shuffle(order);
  const std::size_t n_held =
      std::max<std::size_t>(1, (spectra.size() + 9) / 10);
  std::vector<std::size_t> held(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_held));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_held), order.end());
  if (train_idx.size() < static_cast<std::size_t>(cfg.batch)) {
    throw std::invalid_argument("too few spectra left after holdout");
  }

  GanTrainResult result;
  result.model.config = cfg;

  std::vector<Spectrum> train_data;
  train_data.reserve(train_idx.size());
  for (auto i : train_idx) train_data.push_back(spectra[i]);
  result.model.scaler = ChannelScaler::fit(train_data);
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    if (result.model.scaler.degenerate[c]) {
      result.warnings.push_back(
          std::string("channel ") + kChannelNames[c] + " is constant at " +
          format_double(result.model.scaler.min[c]) +
          "; it will be regenerated as that constant");
    }
  }

  std::vector<std::vector<double>> scaled;
  scaled.reserve(train_data.size());
  for (const auto& s : train_data) {
    scaled.push_back(result.model.scaler.forward(s));
  }

  std::vector<int> g_layers;
  g_layers.push_back(cfg.latent_dim);
  g_layers.insert(g_layers.end(), cfg.gen_widths.begin(), cfg.gen_widths.end());
  g_layers.push_back(static_cast<int>(kNumChannels));
  DenseNet gen = init_net(g_layers, Activation::relu, Activation::tanh, 0.0,
                          cfg.seed ^ kGenInitSalt);

  std::vector<int> d_layers;
  d_layers.push_back(static_cast<int>(kNumChannels));
  d_layers.insert(d_layers.end(), cfg.disc_widths.begin(),
                  cfg.disc_widths.end());
  d_layers.push_back(1);
  DenseNet disc = init_net(d_layers, Activation::relu, Activation::identity,
                           0.0, cfg.seed ^ kDiscInitSalt);

  AdamState adam_g = AdamState::for_net(gen, cfg.lr_g);
  AdamState adam_d = AdamState::for_net(disc, cfg.lr_d);
  // Low first-moment decay damps the adversarial oscillation.
  adam_g.beta1 = 0.5;
  adam_d.beta1 = 0.5;
  Rng rng(cfg.seed ^ kLoopSalt);

  const std::size_t batch = static_cast<std::size_t>(cfg.batch);
  const std::size_t n_batches = scaled.size() / batch;

  auto draw_latent = [&]() {
    std::vector<double> z(static_cast<std::size_t>(cfg.latent_dim));
    for (double& v : z) v = rng.normal();
    return z;
  };

  std::vector<std::size_t> epoch_order(scaled.size());
  for (std::size_t i = 0; i < epoch_order.size(); ++i) epoch_order[i] = i;

  DenseNet ema_gen = gen;
  auto ema_update = [&]() {
    if (cfg.ema_decay == 0.0) return;
    for (std::size_t l = 0; l < gen.weights.size(); ++l) {
      for (std::size_t i = 0; i < gen.weights[l].data.size(); ++i) {
        ema_gen.weights[l].data[i] =
            cfg.ema_decay * ema_gen.weights[l].data[i] +
            (1.0 - cfg.ema_decay) * gen.weights[l].data[i];
      }
      for (std::size_t i = 0; i < gen.biases[l].size(); ++i) {
        ema_gen.biases[l][i] = cfg.ema_decay * ema_gen.biases[l][i] +
                               (1.0 - cfg.ema_decay) * gen.biases[l][i];
      }
    }
  };

  const std::vector<double> kRealLabel{1.0};
  const std::vector<double> kFakeLabel{0.0};

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Constant learning rate for the first half, then linear decay to zero
    // so the equilibrium freezes instead of orbiting.
    const double progress =
        static_cast<double>(epoch) / static_cast<double>(cfg.epochs);
    const double lr_factor =
        progress < 0.5 ? 1.0 : std::max(2.0 * (1.0 - progress), 1e-3);
    adam_g.lr = cfg.lr_g * lr_factor;
    adam_d.lr = cfg.lr_d * lr_factor;

    rng.shuffle(epoch_order);
    double d_loss_sum = 0.0;
    double g_loss_sum = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      // Discriminator step: one real and one generated batch.
      Gradients d_acc = Gradients::zeros_like(disc);
      double d_loss = 0.0;
      for (std::size_t k = 0; k < batch; ++k) {
        const auto& x = scaled[epoch_order[b * batch + k]];
        const ForwardCache cache = forward_eval(disc, x);
        const auto loss = bce_loss_logits(cache.output, kRealLabel);
        d_loss += loss.value;
        d_acc.add(backward(disc, cache, loss.grad));
      }
      for (std::size_t k = 0; k < batch; ++k) {
        const auto fake = forward_eval(gen, draw_latent()).output;
        const ForwardCache cache = forward_eval(disc, fake);
        const auto loss = bce_loss_logits(cache.output, kFakeLabel);
        d_loss += loss.value;
        d_acc.add(backward(disc, cache, loss.grad));
      }
      d_loss /= static_cast<double>(2 * batch);
      if (!std::isfinite(d_loss)) {
        throw std::runtime_error("non-finite D loss at epoch " +
                                 std::to_string(epoch) + " batch " +
                                 std::to_string(b));
      }
      d_acc.scale(1.0 / static_cast<double>(2 * batch));
      adam_step(disc, d_acc, adam_d);

      // Generator step: non-saturating loss, gradients flow through the
      // frozen discriminator into the generator.
      Gradients g_acc = Gradients::zeros_like(gen);
      double g_loss = 0.0;
      for (std::size_t k = 0; k < batch; ++k) {
        const ForwardCache g_cache = forward_eval(gen, draw_latent());
        const ForwardCache d_cache = forward_eval(disc, g_cache.output);
        const auto loss = bce_loss_logits(d_cache.output, kRealLabel);
        g_loss += loss.value;
        const Gradients d_grads = backward(disc, d_cache, loss.grad);
        g_acc.add(backward(gen, g_cache, d_grads.dinput));
      }
      g_loss /= static_cast<double>(batch);
      if (!std::isfinite(g_loss)) {
        throw std::runtime_error("non-finite G loss at epoch " +
                                 std::to_string(epoch) + " batch " +
                                 std::to_string(b));
      }
      g_acc.scale(1.0 / static_cast<double>(batch));
      adam_step(gen, g_acc, adam_g);
      ema_update();

      d_loss_sum += d_loss;
      g_loss_sum += g_loss;
    }

    // Held-back accuracy: fraction of held-back real spectra the
    // discriminator still calls real. Near 1.0 means it separates real
    // from generated; near 0.5 means the generator matches.
    std::size_t called_real = 0;
    for (auto i : held) {
      const auto logit =
          forward_eval(disc, result.model.scaler.forward(spectra[i])).output;
      if (logit[0] > 0.0) ++called_real;
    }
    GanEpochLog entry;
    entry.epoch = epoch;
    entry.d_loss = d_loss_sum / static_cast<double>(n_batches);
    entry.g_loss = g_loss_sum / static_cast<double>(n_batches);
    entry.d_heldout_acc =
        static_cast<double>(called_real) / static_cast<double>(held.size());
    result.log.push_back(entry);
  }

  result.model.generator =
      cfg.ema_decay > 0.0 ? std::move(ema_gen) : std::move(gen);
  result.model.discriminator = std::move(disc);
  return result;
}

std::vector<Spectrum> sample_gan(const GanModel& model, std::size_t n,
                                 std::uint64_t seed) {
  if (n < 1) {
    throw std::invalid_argument("sample count must be >= 1");
  }
  Rng rng(seed);
  std::vector<Spectrum> out;
  out.reserve(n);
  std::vector<double> z(static_cast<std::size_t>(model.config.latent_dim));
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : z) v = rng.normal();
    const auto scaled = forward_eval(model.generator, z).output;
    Spectrum s = model.scaler.inverse(scaled);
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      s[c] = static_cast<double>(
          std::llround(std::clamp(s[c], 0.0, kAdcMax)));
    }
    out.push_back(s);
  }
  return out;
}

void save_gan_log_csv(const std::vector<GanEpochLog>& log,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,d_loss,g_loss,d_heldout_acc\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << format_double(e.d_loss) << ','
        << format_double(e.g_loss) << ',' << format_double(e.d_heldout_acc)
        << '\n';
  }
}

namespace {

constexpr int kGanFormatVersion = 1;

}  // namespace

std::string gan_to_json_text(const GanModel& model) {
  nlohmann::json j;
  j["format_version"] = kGanFormatVersion;
  j["generator"] = nlohmann::json::parse(net_to_json_text(model.generator));
  j["discriminator"] =
      nlohmann::json::parse(net_to_json_text(model.discriminator));
  j["scaler"] = {{"min", model.scaler.min},
                 {"max", model.scaler.max},
                 {"degenerate", model.scaler.degenerate}};
  j["config"] = {{"latent_dim", model.config.latent_dim},
                 {"gen_widths", model.config.gen_widths},
                 {"disc_widths", model.config.disc_widths},
                 {"epochs", model.config.epochs},
                 {"batch", model.config.batch},
                 {"lr_g", model.config.lr_g},
                 {"lr_d", model.config.lr_d},
                 {"ema_decay", model.config.ema_decay},
                 {"seed", model.config.seed}};
  return j.dump(2);
}

GanModel gan_from_json_text(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.at("format_version").get<int>() != kGanFormatVersion) {
    throw std::runtime_error("unsupported GAN format version");
  }
  GanModel model;
  model.generator = net_from_json_text(j.at("generator").dump());
  model.discriminator = net_from_json_text(j.at("discriminator").dump());
  const auto min = j.at("scaler").at("min").get<std::vector<double>>();
  const auto max = j.at("scaler").at("max").get<std::vector<double>>();
  const auto deg = j.at("scaler").at("degenerate").get<std::vector<bool>>();
  if (min.size() != kNumChannels || max.size() != kNumChannels ||
      deg.size() != kNumChannels) {
    throw std::runtime_error("scaler size mismatch in GAN artifact");
  }
  std::copy(min.begin(), min.end(), model.scaler.min.begin());
  std::copy(max.begin(), max.end(), model.scaler.max.begin());
  std::copy(deg.begin(), deg.end(), model.scaler.degenerate.begin());
  const auto& c = j.at("config");
  model.config.latent_dim = c.at("latent_dim").get<int>();
  model.config.gen_widths = c.at("gen_widths").get<std::vector<int>>();
  model.config.disc_widths = c.at("disc_widths").get<std::vector<int>>();
  model.config.epochs = c.at("epochs").get<int>();
  model.config.batch = c.at("batch").get<int>();
  model.config.lr_g = c.at("lr_g").get<double>();
  model.config.lr_d = c.at("lr_d").get<double>();
  model.config.ema_decay = c.at("ema_decay").get<double>();
  model.config.seed = c.at("seed").get<std::uint64_t>();
  if (model.generator.output_size() != static_cast<int>(kNumChannels) ||
      model.discriminator.output_size() != 1) {
    throw std::runtime_error("GAN artifact has wrong dimensions");
  }
  return model;
}

void save_gan(const GanModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << gan_to_json_text(model) << '\n';
}

GanModel load_gan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return gan_from_json_text(buf.str());
}

}  // namespace specloc
