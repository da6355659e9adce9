#include <cmath>

#include "doctest.h"
#include "specloc/report.hpp"
#include "specloc/rng.hpp"
#include "test_util.hpp"

using namespace specloc;
using test::TempDir;

namespace {

// A localizer that predicts a fixed position for every input: zero weights
// and a bias equal to the normalized target.
TrainedLocalizer constant_model(const Position& target, const CoordBox& box) {
  TrainedLocalizer m;
  m.coords = box;
  m.net.layer_sizes = {static_cast<int>(kNumChannels), 2};
  m.net.weights.emplace_back(2, kNumChannels);
  const auto norm = box.normalize(target);
  m.net.biases.push_back({norm[0], norm[1]});
  m.net.hidden_activation = Activation::relu;
  m.net.output_activation = Activation::identity;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    m.scaler.min[c] = 0.0;
    m.scaler.max[c] = 1000.0;
  }
  return m;
}

Dataset samples_at(const std::vector<std::pair<Position, int>>& points,
                   int per_point) {
  std::vector<LabeledSample> samples;
  for (const auto& [pos, rp] : points) {
    for (int k = 0; k < per_point; ++k) {
      LabeledSample s;
      for (std::size_t c = 0; c < kNumChannels; ++c) {
        s.spectrum[c] = 100.0 + 10.0 * static_cast<double>(c) + k;
      }
      s.position = pos;
      s.rp_id = rp;
      s.seq = k;
      samples.push_back(s);
    }
  }
  return Dataset::from_samples(std::move(samples), Provenance::simulated);
}

std::vector<Spectrum> constant_spectra(double value, std::size_t n) {
  Spectrum s;
  for (std::size_t c = 0; c < kNumChannels; ++c) s[c] = value;
  return std::vector<Spectrum>(n, s);
}

const CoordBox kBox{0, 0, 600, 800};

}  // namespace

TEST_SUITE("report") {

TEST_CASE("percentile with linear interpolation") {
  CHECK(percentile_linear({30, 50}, 50) == doctest::Approx(40.0));
  CHECK(percentile_linear({30, 50}, 90) == doctest::Approx(48.0));
  CHECK(percentile_linear({30, 50}, 0) == doctest::Approx(30.0));
  CHECK(percentile_linear({30, 50}, 100) == doctest::Approx(50.0));
  CHECK(percentile_linear({7}, 90) == doctest::Approx(7.0));
  CHECK(percentile_linear({1, 2, 3, 4}, 50) == doctest::Approx(2.5));
}

TEST_CASE("perfect predictor scores zero everywhere") {
  const Position target{300, 200};
  const TrainedLocalizer m = constant_model(target, kBox);
  const Dataset test = samples_at({{target, 0}}, 10);
  const ErrorSummary s = error_summary(m, test);
  CHECK(s.mean_euclidean_cm == 0.0);
  CHECK(s.median_cm == 0.0);
  CHECK(s.p90_cm == 0.0);
  CHECK(s.n == 10);
  REQUIRE(s.per_rp.size() == 1);
  CHECK(s.per_rp[0].mean_cm == 0.0);
}

TEST_CASE("two errors of 30 and 50 cm") {
  const TrainedLocalizer m = constant_model({100, 100}, kBox);
  // One sample 30 cm away, one 50 cm away.
  const Dataset test =
      samples_at({{{130, 100}, 0}, {{100, 150}, 1}}, 1);
  const ErrorSummary s = error_summary(m, test);
  CHECK(s.mean_euclidean_cm == doctest::Approx(40.0));
  CHECK(s.median_cm == doctest::Approx(40.0));
  CHECK(s.p90_cm == doctest::Approx(48.0));
}

TEST_CASE("per-point means reconstitute the global mean") {
  const TrainedLocalizer m = constant_model({250, 250}, kBox);
  const Dataset test = samples_at(
      {{{250, 280}, 0}, {{300, 250}, 1}, {{250, 130}, 2}}, 7);
  const ErrorSummary s = error_summary(m, test);
  double weighted = 0.0;
  std::size_t n = 0;
  for (const auto& r : s.per_rp) {
    weighted += r.mean_cm * static_cast<double>(r.n);
    n += r.n;
  }
  CHECK(n == s.n);
  CHECK(std::abs(weighted / static_cast<double>(n) - s.mean_euclidean_cm) <
        1e-9);
}

TEST_CASE("identical samples have zero distances") {
  const auto real = constant_spectra(100, 500);
  const HistogramPair h = histogram_distance(real, real, kClearChannel);
  CHECK(h.tv_distance == 0.0);
  CHECK(h.wasserstein1 == 0.0);
  CHECK(h.edges.size() == 51);
}

TEST_CASE("disjoint point masses: tv 1, wasserstein equals the gap") {
  const auto real = constant_spectra(100, 400);
  const auto synth = constant_spectra(200, 300);
  const HistogramPair h = histogram_distance(real, synth, 0);
  CHECK(h.tv_distance == doctest::Approx(1.0));
  CHECK(h.wasserstein1 == doctest::Approx(100.0));
  CHECK(h.edges.front() == doctest::Approx(100.0));
  CHECK(h.edges.back() == doctest::Approx(200.0));
}

TEST_CASE("histogram counts sum to the sample sizes") {
  Rng rng(5);
  std::vector<Spectrum> real, synth;
  for (int i = 0; i < 333; ++i) {
    Spectrum s;
    for (std::size_t c = 0; c < kNumChannels; ++c) s[c] = rng.uniform(0, 999);
    real.push_back(s);
  }
  for (int i = 0; i < 222; ++i) {
    Spectrum s;
    for (std::size_t c = 0; c < kNumChannels; ++c) s[c] = rng.uniform(0, 999);
    synth.push_back(s);
  }
  const HistogramPair h = histogram_distance(real, synth, 4);
  std::size_t nr = 0, ns = 0;
  for (auto v : h.real_counts) nr += v;
  for (auto v : h.synth_counts) ns += v;
  CHECK(nr == real.size());
  CHECK(ns == synth.size());
  CHECK(h.tv_distance >= 0.0);
  CHECK(h.tv_distance <= 1.0);
  // Symmetry.
  const HistogramPair rev = histogram_distance(synth, real, 4);
  CHECK(rev.tv_distance == doctest::Approx(h.tv_distance));
  CHECK(rev.wasserstein1 == doctest::Approx(h.wasserstein1));
}

TEST_CASE("wasserstein between unequal sample counts") {
  // Hand case: a = {0, 10}, b = {10}. F_a jumps 0.5 at 0 and 1.0 at 10;
  // F_b jumps at 10. Integral of |diff| = 0.5 * 10 = 5.
  std::vector<Spectrum> a(2), b(1);
  a[0][0] = 0;
  a[1][0] = 10;
  b[0][0] = 10;
  const HistogramPair h = histogram_distance(a, b, 0);
  CHECK(h.wasserstein1 == doctest::Approx(5.0));
}

TEST_CASE("svg artifacts are deterministic") {
  TempDir tmp;
  const RoomPolygon room = default_room().first;
  const Position target{300, 200};
  const TrainedLocalizer m = constant_model(target, kBox);
  const Dataset test = samples_at({{target, 0}, {{100, 700}, 1}}, 3);
  scatter_svg(m, test, room, tmp.file("a.svg"));
  scatter_svg(m, test, room, tmp.file("b.svg"));
  CHECK(test::read_file(tmp.file("a.svg")) == test::read_file(tmp.file("b.svg")));

  DensityGrid grid = make_density_grid(room, 25.0);
  grid.accumulate({10, 10});
  grid.accumulate({10, 10});
  grid.accumulate({599, 799});
  heatmap_svg(grid, room, tmp.file("h1.svg"));
  heatmap_svg(grid, room, tmp.file("h2.svg"));
  CHECK(test::read_file(tmp.file("h1.svg")) == test::read_file(tmp.file("h2.svg")));
}

TEST_CASE("perfect predictions coincide with their truth markers") {
  TempDir tmp;
  const RoomPolygon room = default_room().first;
  const Position target{300, 200};
  const TrainedLocalizer m = constant_model(target, kBox);
  const Dataset test = samples_at({{target, 0}}, 4);
  scatter_svg(m, test, room, tmp.file("p.svg"));
  const std::string svg = test::read_file(tmp.file("p.svg"));
  // Blue truth and red prediction markers use identical coordinates.
  const auto blue = svg.find("fill=\"blue\"");
  const auto red = svg.find("fill=\"red\"");
  REQUIRE(blue != std::string::npos);
  REQUIRE(red != std::string::npos);
  const auto blue_line_start = svg.rfind("<circle", blue);
  const auto red_line_start = svg.rfind("<circle", red);
  const std::string blue_coords =
      svg.substr(blue_line_start, blue - blue_line_start);
  const std::string red_coords =
      svg.substr(red_line_start, red - red_line_start);
  CHECK(blue_coords == red_coords);
}

TEST_CASE("empty density grid renders with a legend") {
  TempDir tmp;
  const RoomPolygon room = default_room().first;
  const DensityGrid grid = make_density_grid(room, 50.0);
  CHECK(grid.total() == 0);
  heatmap_svg(grid, room, tmp.file("z.svg"));
  const std::string svg = test::read_file(tmp.file("z.svg"));
  CHECK(svg.find("rgb(255,255,255)") != std::string::npos);
  CHECK(svg.find("<text") != std::string::npos);
}

TEST_CASE("density grid covers the bounding box") {
  const RoomPolygon room = default_room().first;
  DensityGrid grid = make_density_grid(room, 25.0);
  CHECK(grid.nx == 24);
  CHECK(grid.ny == 32);
  grid.accumulate({0, 0});
  grid.accumulate({599.9, 799.9});
  CHECK(grid.counts[0] == 1);
  CHECK(grid.counts[grid.nx * grid.ny - 1] == 1);
  CHECK(grid.total() == 2);
}

TEST_CASE("csv emitters write the documented headers") {
  TempDir tmp;
  write_summary_csv({{"alpha", "1"}, {"beta", "2.5"}}, tmp.file("s.csv"));
  CHECK(test::read_file(tmp.file("s.csv")) == "metric,value\nalpha,1\nbeta,2.5\n");

  const TrainedLocalizer m = constant_model({100, 100}, kBox);
  const Dataset test = samples_at({{{130, 100}, 0}, {{100, 150}, 1}}, 2);
  const ErrorSummary base = error_summary(m, test);
  write_per_rp_csv(base, nullptr, tmp.file("r1.csv"));
  CHECK(test::read_file(tmp.file("r1.csv")).rfind("rp_id,n,mean_cm\n", 0) == 0);
  write_per_rp_csv(base, &base, tmp.file("r2.csv"));
  CHECK(test::read_file(tmp.file("r2.csv"))
            .rfind("rp_id,n,baseline_mean_cm,augmented_mean_cm\n", 0) == 0);

  const HistogramPair h =
      histogram_distance(constant_spectra(1, 5), constant_spectra(2, 5), 0, 2);
  write_histogram_csv(h, tmp.file("h.csv"));
  CHECK(test::read_file(tmp.file("h.csv")).rfind("bin_lo,bin_hi,real,synth\n", 0) ==
        0);
}

}  // TEST_SUITE
