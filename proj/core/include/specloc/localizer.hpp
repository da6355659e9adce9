#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specloc/nn.hpp"
#include "specloc/spectra.hpp"

namespace specloc {

// Per-channel min/max scaling fitted on the training split only; transform
// maps training values into [0, 1], constant channels map to 0.
struct FeatureScaler {
  std::array<double, kNumChannels> min{};
  std::array<double, kNumChannels> max{};

  static FeatureScaler fit(const Dataset& train);
  std::vector<double> transform(const Spectrum& s) const;
  bool operator==(const FeatureScaler&) const = default;
};

// Axis-aligned box used to normalize target coordinates into [0,1]^2 for
// training; predictions are de-normalized back to cm.
struct CoordBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 600.0;
  double max_y = 800.0;

  std::array<double, 2> normalize(const Position& p) const;
  Position denormalize(double nx, double ny) const;
  bool operator==(const CoordBox&) const = default;
};

struct HyperParams {
  std::vector<int> hidden{64, 64};
  double dropout = 0.1;
  double lr = 1e-3;
  int batch = 32;
  int max_epochs = 500;
  int patience = 25;
  bool operator==(const HyperParams&) const = default;
};

struct TrainMeta {
  std::uint64_t seed = 0;
  HyperParams hp;
  double best_val_cm = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  std::vector<double> val_curve_cm;  // one entry per epoch run
  bool operator==(const TrainMeta&) const = default;
};

struct TrainedLocalizer {
  DenseNet net;  // 11 inputs -> 2 normalized coordinates
  FeatureScaler scaler;
  CoordBox coords;
  TrainMeta meta;
  bool operator==(const TrainedLocalizer&) const = default;
};

struct SplitFractions {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
};

struct SplitResult {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Stratified per reference point: each point's samples are shuffled by seed
// and divided by the fractions (floor allocation, remainders to train, then
// val, then test), so every split covers every reference point. Outputs are
// canonical-ordered. Fractions must be non-negative and sum to 1; every
// reference point needs at least 3 samples.
SplitResult split(const Dataset& ds, const SplitFractions& fractions,
                  std::uint64_t seed);

// Fits the scaler on train only, minimizes MSE on normalized coordinates
// with Adam over shuffled minibatches, tracks validation mean Euclidean
// error (cm) each epoch, and restores the best-validation parameters.
// Stops after `patience` epochs without improvement or at max_epochs.
TrainedLocalizer train_localizer(const Dataset& train, const Dataset& val,
                                 const HyperParams& hp, const CoordBox& coords,
                                 std::uint64_t seed);

// Eval-mode forward, de-normalized to cm. May land outside the room
// polygon; filtering is the pipeline's job.
Position predict(const TrainedLocalizer& model, const Spectrum& s);

double mean_euclidean_cm(const TrainedLocalizer& model, const Dataset& ds);

struct SearchSpace {
  int depth_min = 2;
  int depth_max = 4;
  std::vector<int> widths{32, 64, 128, 256};
  std::vector<double> dropout{0.0, 0.1, 0.2, 0.3};
  double lr_log10_min = -4.0;
  double lr_log10_max = -2.0;
  std::vector<int> batch{16, 32, 64};
  int max_epochs = 150;
  int patience = 15;
};

struct TrialRecord {
  int index = 0;
  HyperParams hp;
  double val_err_cm = 0.0;
  bool ok = false;
  std::string error;
};

struct SearchResult {
  HyperParams best;
  TrainedLocalizer model;
  std::vector<TrialRecord> log;
};

// Seeded random search: trial i draws its hyperparameters and trains with
// stream seed ^ i, so trials are independent and the result is the same
// whether they run serially or in parallel. Ties go to the earlier trial;
// a failing trial is recorded in the log and skipped.
SearchResult random_search(const Dataset& train, const Dataset& val,
                           const SearchSpace& space, int n_trials,
                           const CoordBox& coords, std::uint64_t seed,
                           bool parallel = true);

// CSV log: trial,layers,dropout,lr,batch,val_err_cm (layers as e.g. 64x128).
void save_trial_log_csv(const std::vector<TrialRecord>& log,
                        const std::string& path);

// JSON artifact: the nn artifact plus scaler, coordinate box and training
// metadata. Round trip is bit-exact.
std::string localizer_to_json_text(const TrainedLocalizer& model);
TrainedLocalizer localizer_from_json_text(const std::string& text);
void save_localizer(const TrainedLocalizer& model, const std::string& path);
TrainedLocalizer load_localizer(const std::string& path);

}  // namespace specloc
