// specloc command line: simulate / train / augment / pipeline / evaluate.
// One JSON run-config drives every subcommand; --seed overrides its seed.
// Exit codes: 0 success, 1 usage or config error, 2 runtime stage error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "specloc/pipeline.hpp"
#include "specloc/report.hpp"
#include "specloc/run_config.hpp"
#include "specloc/simlab.hpp"

namespace {

using namespace specloc;

std::string cm(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

RunConfig load_config(const std::string& path,
                      const std::optional<std::uint64_t>& seed_override) {
  RunConfig cfg = RunConfig::from_file(path);
  if (seed_override) cfg.seed = *seed_override;
  return cfg;
}

int cmd_simulate(const std::string& config_path, const std::string& out,
                 const std::optional<std::uint64_t>& seed) {
  const RunConfig cfg = load_config(config_path, seed);
  const RoomPolygon room = cfg.make_room();
  const ReferenceLayout layout = cfg.make_layout(room);
  const Dataset corpus =
      generate_corpus(room, layout, cfg.lamps, cfg.sensor, cfg.protocol,
                      stage_seed(cfg.seed, kStageCorpus));
  save_csv(corpus, out);
  std::cout << "samples=" << corpus.size() << " out=" << out << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data,
              const std::string& out,
              const std::optional<std::uint64_t>& seed) {
  const RunConfig cfg = load_config(config_path, seed);
  const Dataset corpus = load_csv(data);
  const SplitResult splits =
      split(corpus, cfg.split, stage_seed(cfg.seed, kStageSplit));
  const SearchResult search = random_search(
      splits.train, splits.val, cfg.localizer.space, cfg.localizer.n_trials,
      cfg.coord_box(), stage_seed(cfg.seed, kStageBaseline),
      cfg.localizer.parallel_trials);
  save_localizer(search.model, out);
  save_trial_log_csv(search.log, out + ".trials.csv");
  double test_cm = -1.0;
  if (!splits.test.empty()) {
    test_cm = mean_euclidean_cm(search.model, splits.test);
  }
  std::cout << "trials=" << search.log.size()
            << " best_val_cm=" << cm(search.model.meta.best_val_cm)
            << " test_cm=" << (test_cm < 0 ? "n/a" : cm(test_cm))
            << " out=" << out << "\n";
  return 0;
}

int cmd_augment(const std::string& config_path, const std::string& data,
                const std::string& model_path, const std::string& out_dir,
                const std::optional<std::uint64_t>& seed) {
  namespace fs = std::filesystem;
  const RunConfig cfg = load_config(config_path, seed);
  const Dataset corpus = load_csv(data);
  const TrainedLocalizer model = load_localizer(model_path);
  fs::create_directories(out_dir);

  GanConfig gan_cfg = cfg.gan;
  gan_cfg.seed = stage_seed(cfg.seed, kStageGan);
  const std::vector<Spectrum> spectra = strip_coordinates(corpus);
  const GanTrainResult gan = train_gan(spectra, gan_cfg);
  for (const auto& w : gan.warnings) std::cerr << "warning: " << w << "\n";
  save_gan(gan.model, (fs::path(out_dir) / "gan.model.json").string());
  save_gan_log_csv(gan.log, (fs::path(out_dir) / "gan.log.csv").string());

  std::vector<Spectrum> synthetic;
  if (cfg.augment.n_samples > 0) {
    synthetic = sample_gan(gan.model, cfg.augment.n_samples,
                           stage_seed(cfg.seed, kStageSample));
  }
  save_spectra_csv(synthetic, (fs::path(out_dir) / "synthetic.csv").string());

  const RoomPolygon room = cfg.make_room();
  const PseudoLabelResult pseudo =
      pseudo_label(model, room, synthetic, cfg.augment.grid_cell_cm);
  save_csv(Dataset::from_samples(pseudo.kept, Provenance::synthetic),
           (fs::path(out_dir) / "pseudo.csv").string());
  heatmap_svg(pseudo.report.grid, room,
              (fs::path(out_dir) / "heatmap.svg").string());

  std::cout << "generated=" << pseudo.report.generated
            << " kept=" << pseudo.report.kept
            << " discarded=" << pseudo.report.discarded_oob
            << " out=" << out_dir << "\n";
  return 0;
}

int cmd_pipeline(const std::string& config_path, const std::string& out_dir,
                 const std::optional<std::uint64_t>& seed) {
  const RunConfig cfg = load_config(config_path, seed);
  const PipelineResult result = run_pipeline(cfg, out_dir);
  std::cout << "baseline_cm=" << cm(result.baseline.mean_euclidean_cm)
            << " augmented_cm=" << cm(result.augmented.mean_euclidean_cm)
            << " kept=" << result.augmentation.kept
            << " discarded=" << result.augmentation.discarded_oob << "\n";
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data,
                 const std::string& report_dir,
                 const std::string& config_path,
                 const std::optional<std::uint64_t>& seed) {
  namespace fs = std::filesystem;
  const TrainedLocalizer model = load_localizer(model_path);
  const Dataset test = load_csv(data);
  const RoomPolygon room = config_path.empty()
                               ? default_room().first
                               : load_config(config_path, seed).make_room();
  fs::create_directories(report_dir);
  const ErrorSummary summary = error_summary(model, test);
  std::vector<std::pair<std::string, std::string>> rows = {
      {"mean_euclidean_cm", cm(summary.mean_euclidean_cm)},
      {"median_cm", cm(summary.median_cm)},
      {"p90_cm", cm(summary.p90_cm)},
      {"n", std::to_string(summary.n)},
  };
  write_summary_csv(rows, (fs::path(report_dir) / "summary.csv").string());
  write_per_rp_csv(summary, nullptr,
                   (fs::path(report_dir) / "per_rp.csv").string());
  scatter_svg(model, test, room,
              (fs::path(report_dir) / "scatter.svg").string());
  std::cout << "mean_euclidean_cm=" << cm(summary.mean_euclidean_cm)
            << " median_cm=" << cm(summary.median_cm)
            << " p90_cm=" << cm(summary.p90_cm) << " n=" << summary.n << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visible-light spectral fingerprint localization toolkit"};
  app.require_subcommand(1);

  std::string config_path, data_path, model_path, out_path, report_dir;
  std::optional<std::uint64_t> seed;

  auto* simulate = app.add_subcommand("simulate", "Generate a corpus");
  simulate->add_option("--config", config_path, "JSON run config")->required();
  simulate->add_option("--out", out_path, "Output corpus CSV")->required();
  simulate->add_option("--seed", seed, "Override the config seed");

  auto* train = app.add_subcommand("train", "Search and train a localizer");
  train->add_option("--config", config_path, "JSON run config")->required();
  train->add_option("--data", data_path, "Corpus CSV")->required();
  train->add_option("--out", out_path, "Output model JSON")->required();
  train->add_option("--seed", seed, "Override the config seed");

  auto* augment = app.add_subcommand(
      "augment", "Train the GAN, sample and pseudo-label spectra");
  augment->add_option("--config", config_path, "JSON run config")->required();
  augment->add_option("--data", data_path, "Corpus CSV")->required();
  augment->add_option("--model", model_path, "Localizer model JSON")->required();
  augment->add_option("--out", out_path, "Output directory")->required();
  augment->add_option("--seed", seed, "Override the config seed");

  auto* pipeline = app.add_subcommand("pipeline", "Run the five-step method");
  pipeline->add_option("--config", config_path, "JSON run config")->required();
  pipeline->add_option("--out", out_path, "Output directory")->required();
  pipeline->add_option("--seed", seed, "Override the config seed");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a saved model");
  evaluate->add_option("--model", model_path, "Localizer model JSON")->required();
  evaluate->add_option("--data", data_path, "Test CSV")->required();
  evaluate->add_option("--report", report_dir, "Report directory")->required();
  evaluate->add_option("--config", config_path, "Optional run config (room)");
  evaluate->add_option("--seed", seed, "Override the config seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(config_path, out_path, seed);
    if (train->parsed()) return cmd_train(config_path, data_path, out_path, seed);
    if (augment->parsed()) {
      return cmd_augment(config_path, data_path, model_path, out_path, seed);
    }
    if (pipeline->parsed()) return cmd_pipeline(config_path, out_path, seed);
    if (evaluate->parsed()) {
      return cmd_evaluate(model_path, data_path, report_dir, config_path, seed);
    }
  } catch (const specloc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
