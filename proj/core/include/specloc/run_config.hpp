#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "specloc/geometry.hpp"
#include "specloc/localizer.hpp"
#include "specloc/simlab.hpp"
#include "specloc/tabgan.hpp"

namespace specloc {

// Config violations carry a JSON-pointer path to the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& pointer, const std::string& what)
      : std::runtime_error(pointer + ": " + what), pointer_(pointer) {}

  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

struct RoomConfig {
  std::vector<Position> vertices;          // empty -> default U shape
  std::vector<Position> reference_points;  // empty -> generated layout
  GridSpec grid;
};

struct LocalizerConfig {
  int n_trials = 20;
  bool parallel_trials = true;
  SearchSpace space;
};

struct AugmentConfig {
  std::size_t n_samples = 6000;
  double grid_cell_cm = 25.0;
};

// Desk-scale scarcity stress: before training, drop a fraction of the
// train split inside one region (default: the left arm of the U).
struct StressRegion {
  double min_x = 0.0;
  double min_y = 300.0;
  double max_x = 200.0;
  double max_y = 800.0;

  bool contains(const Position& p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
};

struct StressConfig {
  bool enabled = false;
  StressRegion region;
  double drop_fraction = 0.5;
};

struct ReportConfig {
  int hist_bins = 50;
};

// The single validated run document. Every key is optional and defaults to
// the values below; unknown keys are rejected before any stage runs.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string corpus_file;  // empty -> simulate the corpus
  RoomConfig room;
  std::vector<Lamp> lamps = default_lamps();
  SensorModel sensor = default_sensor();
  Protocol protocol;
  SplitFractions split;
  LocalizerConfig localizer;
  GanConfig gan;
  AugmentConfig augment;
  StressConfig stress;
  ReportConfig report;

  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_file(const std::string& path);

  // Normalized echo with every default filled in.
  std::string to_json_text() const;

  RoomPolygon make_room() const;
  ReferenceLayout make_layout(const RoomPolygon& room) const;
  CoordBox coord_box() const;
};

}  // namespace specloc
