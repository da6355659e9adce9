#include <cmath>

#include "doctest.h"
#include "specloc/rng.hpp"
#include "specloc/tabgan.hpp"
#include "test_util.hpp"

using namespace specloc;
using test::TempDir;

namespace {

Spectrum base_spectrum() {
  Spectrum s;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    s[c] = 300.0 + 55.0 * static_cast<double>(c);
  }
  return s;
}

GanConfig tiny_config(std::uint64_t seed) {
  GanConfig cfg;
  cfg.latent_dim = 4;
  cfg.gen_widths = {16, 16};
  cfg.disc_widths = {16, 16};
  cfg.epochs = 40;
  cfg.batch = 16;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_SUITE("tabgan") {

TEST_CASE("scaler round trip on non-degenerate channels") {
  Rng rng(3);
  std::vector<Spectrum> data;
  for (int i = 0; i < 64; ++i) {
    Spectrum s;
    for (std::size_t c = 0; c < kNumChannels; ++c) s[c] = rng.uniform(0, 5000);
    data.push_back(s);
  }
  const ChannelScaler sc = ChannelScaler::fit(data);
  for (const auto& s : data) {
    const Spectrum back = sc.inverse(sc.forward(s));
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      CHECK(std::abs(back[c] - s[c]) < 1e-9);
    }
  }
}

TEST_CASE("a constant training distribution is reproduced exactly") {
  const Spectrum target = base_spectrum();
  const std::vector<Spectrum> data(64, target);
  const GanTrainResult res = train_gan(data, tiny_config(1));
  // Every channel is degenerate: flagged, and regenerated as the constant.
  CHECK(res.warnings.size() == kNumChannels);
  const auto samples = sample_gan(res.model, 32, 5);
  for (const auto& s : samples) {
    CHECK(s == target);
  }
}

TEST_CASE("near-constant training data converges within 5 percent") {
  // One spectrum with a +-1 jitter so no channel is degenerate.
  const Spectrum center = base_spectrum();
  std::vector<Spectrum> data;
  for (int i = 0; i < 64; ++i) {
    Spectrum s = center;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      s[c] += (i % 2 == 0) ? 1.0 : -1.0;
    }
    data.push_back(s);
  }
  GanConfig cfg = tiny_config(2);
  cfg.epochs = 120;
  const GanTrainResult res = train_gan(data, cfg);
  CHECK(res.warnings.empty());
  for (const auto& s : sample_gan(res.model, 64, 9)) {
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      CHECK(std::abs(s[c] - center[c]) / center[c] < 0.05);
    }
  }
}

TEST_CASE("degenerate channel is warned about and regenerated") {
  Rng rng(8);
  std::vector<Spectrum> data;
  for (int i = 0; i < 64; ++i) {
    Spectrum s;
    for (std::size_t c = 0; c < kNumChannels; ++c) s[c] = rng.uniform(100, 900);
    s[2] = 555.0;  // constant F3
    data.push_back(s);
  }
  const GanTrainResult res = train_gan(data, tiny_config(3));
  REQUIRE(res.warnings.size() == 1);
  CHECK(res.warnings[0].find("F3") != std::string::npos);
  for (const auto& s : sample_gan(res.model, 16, 4)) {
    CHECK(s[2] == 555.0);
  }
}

TEST_CASE("training is deterministic in data and config") {
  Rng rng(12);
  std::vector<Spectrum> data;
  for (int i = 0; i < 80; ++i) {
    Spectrum s;
    for (std::size_t c = 0; c < kNumChannels; ++c) s[c] = rng.uniform(0, 2000);
    data.push_back(s);
  }
  const GanTrainResult a = train_gan(data, tiny_config(7));
  const GanTrainResult b = train_gan(data, tiny_config(7));
  CHECK(gan_to_json_text(a.model) == gan_to_json_text(b.model));
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].d_loss == b.log[i].d_loss);
    CHECK(a.log[i].g_loss == b.log[i].g_loss);
    CHECK(a.log[i].d_heldout_acc == b.log[i].d_heldout_acc);
  }
  TempDir tmp;
  save_gan_log_csv(a.log, tmp.file("a.csv"));
  save_gan_log_csv(b.log, tmp.file("b.csv"));
  CHECK(test::read_file(tmp.file("a.csv")) == test::read_file(tmp.file("b.csv")));
}

TEST_CASE("sampling is seeded and respects the spectrum invariants") {
  Rng rng(21);
  std::vector<Spectrum> data;
  for (int i = 0; i < 64; ++i) {
    Spectrum s;
    for (std::size_t c = 0; c < kNumChannels; ++c) s[c] = rng.uniform(0, 60000);
    data.push_back(s);
  }
  const GanTrainResult res = train_gan(data, tiny_config(9));
  const auto a = sample_gan(res.model, 6000, 77);
  CHECK(a.size() == 6000);
  const auto b = sample_gan(res.model, 1, 77);
  CHECK(a[0] == b[0]);
  for (const auto& s : a) {
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      CHECK(s[c] >= 0.0);
      CHECK(s[c] <= kAdcMax);
      CHECK(s[c] == std::floor(s[c]));  // integer counts
    }
  }
  CHECK_THROWS_AS(sample_gan(res.model, 0, 1), std::invalid_argument);
}

TEST_CASE("discriminator neither collapses nor separates on bimodal data") {
  // Two clusters per channel; a healthy adversarial equilibrium leaves the
  // discriminator guessing on held-back real rows.
  Rng rng(31);
  std::vector<Spectrum> data;
  for (int i = 0; i < 400; ++i) {
    Spectrum s;
    const double mode = (i % 2 == 0) ? 400.0 : 1600.0;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      s[c] = mode + rng.uniform(-40, 40);
    }
    data.push_back(s);
  }
  GanConfig cfg;
  cfg.latent_dim = 8;
  cfg.gen_widths = {32, 32};
  cfg.disc_widths = {32, 32};
  cfg.epochs = 300;
  cfg.batch = 64;
  cfg.seed = 5;
  const GanTrainResult res = train_gan(data, cfg);
  const double acc = res.log.back().d_heldout_acc;
  CHECK(acc > 0.4);
  CHECK(acc < 0.75);
}

TEST_CASE("too little data is rejected") {
  const std::vector<Spectrum> data(20, base_spectrum());
  CHECK_THROWS_AS(train_gan(data, tiny_config(1)), std::invalid_argument);
}

TEST_CASE("gan artifact round trip is bit-exact") {
  Rng rng(41);
  std::vector<Spectrum> data;
  for (int i = 0; i < 64; ++i) {
    Spectrum s;
    for (std::size_t c = 0; c < kNumChannels; ++c) s[c] = rng.uniform(0, 3000);
    data.push_back(s);
  }
  GanConfig cfg = tiny_config(11);
  cfg.epochs = 5;
  const GanTrainResult res = train_gan(data, cfg);
  TempDir tmp;
  save_gan(res.model, tmp.file("gan.json"));
  const GanModel back = load_gan(tmp.file("gan.json"));
  CHECK(back == res.model);
  CHECK(sample_gan(back, 5, 3) == sample_gan(res.model, 5, 3));
}

}  // TEST_SUITE
