#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "specloc/geometry.hpp"
#include "specloc/localizer.hpp"
#include "specloc/spectra.hpp"

namespace specloc {

struct PerRpError {
  int rp_id = -1;  // -1 buckets samples without a reference point
  std::size_t n = 0;
  double mean_cm = 0.0;
};

struct ErrorSummary {
  double mean_euclidean_cm = 0.0;
  double median_cm = 0.0;
  double p90_cm = 0.0;
  std::vector<PerRpError> per_rp;
  std::size_t n = 0;
};

// Linear-interpolation percentile between order statistics (values must be
// sorted ascending, q in [0, 100]).
double percentile_linear(const std::vector<double>& sorted_values, double q);

ErrorSummary error_summary(const TrainedLocalizer& model, const Dataset& test);

struct HistogramPair {
  std::string channel;
  std::vector<double> edges;  // bins+1 edges over the combined min-max range
  std::vector<std::size_t> real_counts;
  std::vector<std::size_t> synth_counts;
  double tv_distance = 0.0;   // half L1 between normalized bin masses
  double wasserstein1 = 0.0;  // earth-mover distance on raw values, count units
};

// Uniform bins over the union range of both samples (a zero-width range is
// widened by +-0.5 so point masses still bin). Wasserstein-1 is computed
// from the sorted raw values, not the bins.
HistogramPair histogram_distance(const std::vector<Spectrum>& real,
                                 const std::vector<Spectrum>& synth,
                                 std::size_t channel, int bins = 50);

// Cell-count grid over the room bounding box; counts are row-major with x
// fastest (index iy * nx + ix).
struct DensityGrid {
  double cell_cm = 25.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<std::size_t> counts;

  std::size_t total() const;
  void accumulate(const Position& p);
};

DensityGrid make_density_grid(const RoomPolygon& room, double cell_cm);

// Truth/prediction scatter: room outline, one blue marker per truth, one
// red marker per prediction, a thin gray segment joining each pair.
// Deterministic bytes for fixed inputs.
void scatter_svg(const TrainedLocalizer& model, const Dataset& test,
                 const RoomPolygon& room, const std::string& path);

// Density heatmap with a white-to-dark-blue ramp, linear in count/max,
// plus a legend. Deterministic bytes for fixed inputs.
void heatmap_svg(const DensityGrid& grid, const RoomPolygon& room,
                 const std::string& path);

// report/ file emitters.
void write_summary_csv(
    const std::vector<std::pair<std::string, std::string>>& rows,
    const std::string& path);
void write_per_rp_csv(const ErrorSummary& baseline, const ErrorSummary* augmented,
                      const std::string& path);
void write_histogram_csv(const HistogramPair& hist, const std::string& path);

}  // namespace specloc
