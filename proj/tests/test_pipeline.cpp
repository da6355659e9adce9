#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "specloc/pipeline.hpp"
#include "specloc/rng.hpp"
#include "test_util.hpp"

using namespace specloc;
using test::TempDir;

namespace {

TrainedLocalizer constant_model(const Position& target) {
  TrainedLocalizer m;
  m.coords = {0, 0, 600, 800};
  m.net.layer_sizes = {static_cast<int>(kNumChannels), 2};
  m.net.weights.emplace_back(2, kNumChannels);
  const auto norm = m.coords.normalize(target);
  m.net.biases.push_back({norm[0], norm[1]});
  m.net.output_activation = Activation::identity;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    m.scaler.min[c] = 0.0;
    m.scaler.max[c] = 1000.0;
  }
  return m;
}

std::vector<Spectrum> random_spectra(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Spectrum> out;
  for (std::size_t i = 0; i < n; ++i) {
    Spectrum s;
    for (std::size_t c = 0; c < kNumChannels; ++c) s[c] = rng.uniform(0, 900);
    out.push_back(s);
  }
  return out;
}

// Small but complete run config: 420-sample corpus, 2-trial searches,
// a short GAN schedule and 400 synthetic draws.
RunConfig tiny_config() {
  RunConfig cfg = RunConfig::from_json_text("{}");
  cfg.protocol = Protocol{10.0, 1.0};
  cfg.localizer.n_trials = 2;
  cfg.localizer.space.max_epochs = 15;
  cfg.localizer.space.patience = 6;
  cfg.gan.epochs = 40;
  cfg.gan.batch = 64;
  cfg.augment.n_samples = 400;
  return cfg;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("pseudo labels inside a generous room are all kept") {
  const RoomPolygon plane({{-1e6, -1e6}, {1e6, -1e6}, {1e6, 1e6}, {-1e6, 1e6}});
  const TrainedLocalizer m = constant_model({300, 400});
  const auto spectra = random_spectra(100, 1);
  const PseudoLabelResult res = pseudo_label(m, plane, spectra, 1e5);
  CHECK(res.report.generated == 100);
  CHECK(res.report.kept == 100);
  CHECK(res.report.discarded_oob == 0);
  CHECK(res.kept.size() == 100);
  CHECK(res.report.grid.total() == 100);
  for (std::size_t i = 0; i < res.kept.size(); ++i) {
    CHECK_FALSE(res.kept[i].rp_id.has_value());
    CHECK(res.kept[i].seq == static_cast<int>(i));
  }
}

TEST_CASE("a model stuck inside the notch keeps nothing") {
  const RoomPolygon room = default_room().first;
  const TrainedLocalizer m = constant_model({300, 700});  // inside the notch
  const auto spectra = random_spectra(50, 2);
  const PseudoLabelResult res = pseudo_label(m, room, spectra);
  CHECK(res.report.kept == 0);
  CHECK(res.report.discarded_oob == 50);
  CHECK(res.report.generated == 50);
  CHECK(res.kept.empty());
}

TEST_CASE("counts always partition the generated set") {
  const RoomPolygon room = default_room().first;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    // A model that spreads predictions around the bounding box, so some
    // fall inside the notch.
    TrainedLocalizer m = constant_model({300, 400});
    Rng rng(seed);
    for (double& v : m.net.weights[0].data) v = rng.uniform(-0.5, 0.5);
    const auto spectra = random_spectra(200, seed * 7);
    const PseudoLabelResult res = pseudo_label(m, room, spectra);
    CHECK(res.report.generated ==
          res.report.kept + res.report.discarded_oob);
    CHECK(res.report.grid.total() == res.report.kept);
    for (const auto& s : res.kept) {
      CHECK(contains(room, s.position));
    }
  }
}

TEST_CASE("mix with no pseudo rows tags and keeps the real data") {
  Rng rng(3);
  std::vector<LabeledSample> real;
  for (int i = 0; i < 12; ++i) {
    LabeledSample s;
    for (std::size_t c = 0; c < kNumChannels; ++c) s.spectrum[c] = rng.uniform(0, 500);
    s.position = {100.0 * (i % 3), 50.0 * i};
    s.rp_id = i % 3;
    s.seq = i;
    real.push_back(s);
  }
  const Dataset real_ds =
      Dataset::from_samples(std::move(real), Provenance::simulated);
  const Dataset mixed = mix(real_ds, {});
  CHECK(mixed.size() == real_ds.size());
  CHECK(mixed.provenance == Provenance::mixed);
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    CHECK(mixed.samples[i].source == Provenance::measured);
    CHECK(mixed.samples[i].spectrum == real_ds.samples[i].spectrum);
  }
}

TEST_CASE("mix concatenates and canonicalizes") {
  const RoomPolygon plane({{-1e6, -1e6}, {1e6, -1e6}, {1e6, 1e6}, {-1e6, 1e6}});
  const TrainedLocalizer m = constant_model({10, 20});
  const auto pseudo = pseudo_label(m, plane, random_spectra(15, 4), 1e5).kept;
  Rng rng(9);
  std::vector<LabeledSample> real;
  for (int i = 0; i < 10; ++i) {
    LabeledSample s;
    for (std::size_t c = 0; c < kNumChannels; ++c) s.spectrum[c] = rng.uniform(0, 500);
    s.position = {400, 500};
    s.rp_id = 0;
    s.seq = i;
    real.push_back(s);
  }
  const Dataset real_ds =
      Dataset::from_samples(std::move(real), Provenance::simulated);
  const Dataset mixed = mix(real_ds, pseudo);
  CHECK(mixed.size() == 25);
  std::size_t synthetic = 0;
  for (const auto& s : mixed.samples) {
    REQUIRE(s.source.has_value());
    if (*s.source == Provenance::synthetic) ++synthetic;
  }
  CHECK(synthetic == 15);

  TempDir tmp;
  save_csv(mixed, tmp.file("m1.csv"));
  save_csv(mix(real_ds, pseudo), tmp.file("m2.csv"));
  CHECK(test::read_file(tmp.file("m1.csv")) == test::read_file(tmp.file("m2.csv")));
}

TEST_CASE("tiny pipeline run: artifacts, counts and isolation") {
  TempDir tmp;
  RunConfig cfg = tiny_config();
  cfg.seed = 5;
  const PipelineResult res = run_pipeline(cfg, tmp.file("out"));

  CHECK(res.corpus_size == 420);
  CHECK(res.augmentation.generated == 400);
  CHECK(res.augmentation.generated ==
        res.augmentation.kept + res.augmentation.discarded_oob);
  CHECK(res.test_overlap_rows == 0);
  CHECK(res.baseline.n == res.test_size);
  CHECK(res.augmented.n == res.test_size);

  namespace fs = std::filesystem;
  for (const std::string rel :
       {"corpus.csv", "baseline.model.json", "gan.model.json", "synthetic.csv",
        "pseudo.csv", "mixed.csv", "augmented.model.json", "result.json",
        "report/summary.csv", "report/per_rp.csv", "report/scatter.svg",
        "report/heatmap.svg", "report/hist_Clear.csv", "report/hist_F5.csv"}) {
    CAPTURE(rel);
    CHECK(fs::exists(fs::path(tmp.file("out")) / rel));
  }

  // The mixed corpus holds the stressed train split plus every kept row.
  CHECK(res.mixed_size == res.train_size + res.augmentation.kept);

  // result.json is loadable and carries the bookkeeping counts.
  const std::string text = test::read_file(tmp.file("out") + "/result.json");
  CHECK(text.find("\"generated\": 400") != std::string::npos);
  CHECK(text.find("\"test_overlap_rows\": 0") != std::string::npos);
}

TEST_CASE("zero synthetic samples degenerate to a plain retrain") {
  TempDir tmp;
  RunConfig cfg = tiny_config();
  cfg.augment.n_samples = 0;
  cfg.seed = 6;
  const PipelineResult a = run_pipeline(cfg, tmp.file("a"));
  CHECK(a.augmentation.generated == 0);
  CHECK(a.augmentation.kept == 0);
  CHECK(a.mixed_size == a.train_size);
  // synthetic.csv exists but holds only the header.
  const std::string synth = test::read_file(tmp.file("a") + "/synthetic.csv");
  CHECK(std::count(synth.begin(), synth.end(), '\n') == 1);

  const PipelineResult b = run_pipeline(cfg, tmp.file("b"));
  CHECK(test::read_file(tmp.file("a") + "/result.json") ==
        test::read_file(tmp.file("b") + "/result.json"));
  CHECK(test::read_file(tmp.file("a") + "/augmented.model.json") ==
        test::read_file(tmp.file("b") + "/augmented.model.json"));
}

TEST_CASE("stress drop thins the configured region only") {
  TempDir tmp;
  RunConfig cfg = tiny_config();
  cfg.stress.enabled = true;
  cfg.seed = 7;
  const PipelineResult res = run_pipeline(cfg, tmp.file("out"));
  const Dataset corpus = load_csv(tmp.file("out") + "/corpus.csv");
  const SplitResult splits = split(corpus, cfg.split,
                                   stage_seed(cfg.seed, kStageSplit));
  const Dataset mixed = load_csv(tmp.file("out") + "/mixed.csv");
  std::size_t in_region_train = 0, out_region_train = 0;
  std::size_t in_region_full = 0, out_region_full = 0;
  for (const auto& s : mixed.samples) {
    if (s.source == Provenance::measured) {
      (cfg.stress.region.contains(s.position) ? in_region_train
                                              : out_region_train)++;
    }
  }
  for (const auto& s : splits.train.samples) {
    (cfg.stress.region.contains(s.position) ? in_region_full
                                            : out_region_full)++;
  }
  CHECK(out_region_train == out_region_full);
  CHECK(in_region_train < in_region_full);
  // Every region point has 8 train rows here, so the floored 50% drop
  // halves the region exactly.
  CHECK(in_region_train == in_region_full / 2);
}

TEST_CASE("stage failures name the stage") {
  TempDir tmp;
  RunConfig cfg = tiny_config();
  cfg.corpus_file = tmp.file("missing.csv");
  try {
    run_pipeline(cfg, tmp.file("out"));
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("stage corpus") != std::string::npos);
  }
}

}  // TEST_SUITE
