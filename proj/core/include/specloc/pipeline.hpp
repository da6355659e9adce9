#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specloc/geometry.hpp"
#include "specloc/localizer.hpp"
#include "specloc/report.hpp"
#include "specloc/run_config.hpp"
#include "specloc/spectra.hpp"
#include "specloc/tabgan.hpp"

namespace specloc {

// Fixed per-stage seed derivation: stage k draws from master ^ k. Any
// stage can be re-run in isolation bit-identically.
enum StageSeed : std::uint64_t {
  kStageCorpus = 1,
  kStageSplit = 2,
  kStageStress = 3,
  kStageBaseline = 4,
  kStageGan = 5,
  kStageSample = 6,
  kStageRetrain = 7,
};

inline std::uint64_t stage_seed(std::uint64_t master, StageSeed stage) {
  return master ^ static_cast<std::uint64_t>(stage);
}

struct AugmentationReport {
  std::size_t generated = 0;
  std::size_t discarded_oob = 0;
  std::size_t kept = 0;
  DensityGrid grid;  // spatial density of kept pseudo-labels
};

struct PseudoLabelResult {
  std::vector<LabeledSample> kept;
  AugmentationReport report;
};

// Predicts a position for each spectrum, keeps the in-room ones (rp_id
// absent, seq numbered by kept order) and partitions the counts exactly:
// generated = kept + discarded_oob.
PseudoLabelResult pseudo_label(const TrainedLocalizer& model,
                               const RoomPolygon& room,
                               const std::vector<Spectrum>& spectra,
                               double grid_cell_cm = 25.0);

// Concatenates and re-canonicalizes; the result is provenance `mixed` with
// per-sample source tags (measured for real rows, synthetic for pseudo
// rows).
Dataset mix(const Dataset& real, const std::vector<LabeledSample>& pseudo);

struct PipelineResult {
  std::uint64_t master_seed = 0;
  std::size_t corpus_size = 0;
  std::size_t train_size = 0;  // after any stress drop
  std::size_t val_size = 0;
  std::size_t test_size = 0;
  std::size_t mixed_size = 0;
  ErrorSummary baseline;
  ErrorSummary augmented;
  HyperParams baseline_hp;
  HyperParams augmented_hp;
  AugmentationReport augmentation;
  double improvement_percent = 0.0;
  std::size_t test_overlap_rows = 0;  // leakage audit, must be 0
  std::vector<std::pair<std::string, double>> tv_by_channel;
  std::vector<std::string> files;
};

// The five-step method end to end: corpus, baseline search, GAN on the
// coordinate-free train split, sampling, pseudo-labeling with out-of-bounds
// filtering, corpus mixing, a fresh retraining search, and a paired
// evaluation of both models on the one untouched test split. Artifacts are
// flushed to out_dir as each stage completes; a stage failure rethrows with
// the stage name attached.
PipelineResult run_pipeline(const RunConfig& config,
                            const std::string& out_dir);

std::string pipeline_result_to_json_text(const PipelineResult& result,
                                         const RunConfig& config);

}  // namespace specloc
