#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "specloc/nn.hpp"
#include "specloc/spectra.hpp"

namespace specloc {

struct GanConfig {
  int latent_dim = 16;
  std::vector<int> gen_widths{64, 64};
  std::vector<int> disc_widths{64, 64};
  int epochs = 1200;
  int batch = 256;
  double lr_g = 2e-4;
  double lr_d = 2e-4;
  // The exported generator is an exponential moving average of the live
  // generator's weights, which sits at the center of the adversarial
  // oscillation; 0 exports the last live weights instead.
  double ema_decay = 0.999;
  std::uint64_t seed = 0;
  bool operator==(const GanConfig&) const = default;
};

// Per-channel affine map between counts and the generator's tanh range
// [-1, 1]. A channel constant across the training data is marked
// degenerate: it scales to 0 and inverts to the constant.
struct ChannelScaler {
  std::array<double, kNumChannels> min{};
  std::array<double, kNumChannels> max{};
  std::array<bool, kNumChannels> degenerate{};

  static ChannelScaler fit(const std::vector<Spectrum>& spectra);
  std::vector<double> forward(const Spectrum& s) const;
  Spectrum inverse(const std::vector<double>& scaled) const;
  bool operator==(const ChannelScaler&) const = default;
};

struct GanModel {
  DenseNet generator;      // latent_dim -> 11, tanh output
  DenseNet discriminator;  // 11 -> 1, logit output
  ChannelScaler scaler;
  GanConfig config;
  bool operator==(const GanModel&) const = default;
};

struct GanEpochLog {
  int epoch = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double d_heldout_acc = 0.0;
};

struct GanTrainResult {
  GanModel model;
  std::vector<GanEpochLog> log;
  std::vector<std::string> warnings;
};

// Non-saturating GAN with alternating single steps: one discriminator
// update (BCE, real=1 / fake=0 logits) then one generator update
// (maximize log D(G(z))) per batch, Adam for both. 10% of the real
// spectra are held back from training; the log records the discriminator's
// per-epoch accuracy on them. Fully determined by (spectra, cfg).
GanTrainResult train_gan(const std::vector<Spectrum>& spectra,
                         const GanConfig& cfg);

// n latent draws ~ N(0, I) through the generator, inverse-scaled, clamped
// to [0, 65535] and rounded, so samples are type-compatible with measured
// data. Deterministic from seed.
std::vector<Spectrum> sample_gan(const GanModel& model, std::size_t n,
                                 std::uint64_t seed);

void save_gan_log_csv(const std::vector<GanEpochLog>& log,
                      const std::string& path);

// JSON artifact (two nn artifacts + scaler + config echo); bit-exact round
// trip.
std::string gan_to_json_text(const GanModel& model);
GanModel gan_from_json_text(const std::string& text);
void save_gan(const GanModel& model, const std::string& path);
GanModel load_gan(const std::string& path);

}  // namespace specloc
