#include "specloc/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "specloc/numfmt.hpp"

namespace specloc {

double percentile_linear(const std::vector<double>& sorted_values, double q) {
  if (sorted_values.empty()) {
    throw std::invalid_argument("percentile of empty list");
  }
  if (q < 0.0 || q > 100.0) {
    throw std::invalid_argument("percentile q must be in [0, 100]");
  }
  if (sorted_values.size() == 1) return sorted_values.front();
  const double rank =
      q / 100.0 * static_cast<double>(sorted_values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const double frac = rank - static_cast<double>(lo);
  if (lo + 1 >= sorted_values.size()) return sorted_values.back();
  return sorted_values[lo] * (1.0 - frac) + sorted_values[lo + 1] * frac;
}

ErrorSummary error_summary(const TrainedLocalizer& model, const Dataset& test) {
  if (test.empty()) {
    throw std::invalid_argument("error_summary on empty test set");
  }
  ErrorSummary sum;
  sum.n = test.size();
  std::vector<double> errors;
  errors.reserve(test.size());
  std::map<int, std::pair<std::size_t, double>> per_rp;  // rp -> (n, total)
  for (const auto& s : test.samples) {
    const Position pred = predict(model, s.spectrum);
    const double err = std::hypot(pred.x - s.position.x, pred.y - s.position.y);
    errors.push_back(err);
    sum.mean_euclidean_cm += err;
    auto& bucket = per_rp[s.rp_id.value_or(-1)];
    bucket.first += 1;
    bucket.second += err;
  }
  sum.mean_euclidean_cm /= static_cast<double>(errors.size());
  std::sort(errors.begin(), errors.end());
  sum.median_cm = percentile_linear(errors, 50.0);
  sum.p90_cm = percentile_linear(errors, 90.0);
  for (const auto& [rp, bucket] : per_rp) {
    sum.per_rp.push_back(
        {rp, bucket.first, bucket.second / static_cast<double>(bucket.first)});
  }
  return sum;
}

HistogramPair histogram_distance(const std::vector<Spectrum>& real,
                                 const std::vector<Spectrum>& synth,
                                 std::size_t channel, int bins) {
  if (real.empty() || synth.empty()) {
    throw std::invalid_argument("histogram_distance needs non-empty inputs");
  }
  if (channel >= kNumChannels || bins < 1) {
    throw std::invalid_argument("bad channel or bin count");
  }
  std::vector<double> a, b;
  a.reserve(real.size());
  b.reserve(synth.size());
  for (const auto& s : real) a.push_back(s[channel]);
  for (const auto& s : synth) b.push_back(s[channel]);

  double lo = a.front(), hi = a.front();
  for (double v : a) { lo = std::min(lo, v); hi = std::max(hi, v); }
  for (double v : b) { lo = std::min(lo, v); hi = std::max(hi, v); }
  if (lo == hi) {  // point mass: widen so the single bin row still renders
    lo -= 0.5;
    hi += 0.5;
  }

  HistogramPair h;
  h.channel = kChannelNames[channel];
  const auto nb = static_cast<std::size_t>(bins);
  h.edges.resize(nb + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= nb; ++i) {
    h.edges[i] = lo + width * static_cast<double>(i);
  }
  h.edges.back() = hi;
  h.real_counts.assign(nb, 0);
  h.synth_counts.assign(nb, 0);
  auto bin_of = [&](double v) {
    const auto idx = static_cast<std::size_t>(
        std::clamp((v - lo) / width, 0.0, static_cast<double>(bins - 1)));
    return std::min(idx, nb - 1);
  };
  for (double v : a) h.real_counts[bin_of(v)] += 1;
  for (double v : b) h.synth_counts[bin_of(v)] += 1;

  double tv = 0.0;
  for (std::size_t i = 0; i < nb; ++i) {
    const double p =
        static_cast<double>(h.real_counts[i]) / static_cast<double>(a.size());
    const double q =
        static_cast<double>(h.synth_counts[i]) / static_cast<double>(b.size());
    tv += std::abs(p - q);
  }
  h.tv_distance = 0.5 * tv;

  // Wasserstein-1 via the CDF difference over the merged support.
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t ia = 0, ib = 0;
  const double na = static_cast<double>(a.size());
  const double nb_count = static_cast<double>(b.size());
  double w1 = 0.0;
  double prev = std::min(a.front(), b.front());
  while (ia < a.size() || ib < b.size()) {
    const double t = (ia < a.size() && (ib >= b.size() || a[ia] <= b[ib]))
                         ? a[ia]
                         : b[ib];
    w1 += std::abs(static_cast<double>(ia) / na -
                   static_cast<double>(ib) / nb_count) *
          (t - prev);
    while (ia < a.size() && a[ia] == t) ++ia;
    while (ib < b.size() && b[ib] == t) ++ib;
    prev = t;
  }
  h.wasserstein1 = w1;
  return h;
}

std::size_t DensityGrid::total() const {
  std::size_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

void DensityGrid::accumulate(const Position& p) {
  if (nx == 0 || ny == 0) {
    throw std::logic_error("density grid is empty");
  }
  const auto ix = static_cast<std::size_t>(std::clamp(
      std::floor((p.x - origin_x) / cell_cm), 0.0, static_cast<double>(nx - 1)));
  const auto iy = static_cast<std::size_t>(std::clamp(
      std::floor((p.y - origin_y) / cell_cm), 0.0, static_cast<double>(ny - 1)));
  counts[iy * nx + ix] += 1;
}

DensityGrid make_density_grid(const RoomPolygon& room, double cell_cm) {
  if (!(cell_cm > 0.0)) {
    throw std::invalid_argument("grid cell size must be positive");
  }
  DensityGrid g;
  g.cell_cm = cell_cm;
  g.origin_x = room.bbox_min().x;
  g.origin_y = room.bbox_min().y;
  g.nx = static_cast<std::size_t>(
      std::ceil((room.bbox_max().x - g.origin_x) / cell_cm));
  g.ny = static_cast<std::size_t>(
      std::ceil((room.bbox_max().y - g.origin_y) / cell_cm));
  g.counts.assign(g.nx * g.ny, 0);
  return g;
}

namespace {

constexpr double kSvgMargin = 20.0;

// SVG y grows downward; the room's y grows northward.
struct SvgFrame {
  double min_x, min_y, max_x, max_y;

  double width() const { return max_x - min_x + 2 * kSvgMargin; }
  double height() const { return max_y - min_y + 2 * kSvgMargin; }
  double sx(double x) const { return x - min_x + kSvgMargin; }
  double sy(double y) const { return max_y - y + kSvgMargin; }
};

SvgFrame frame_for(const RoomPolygon& room) {
  return {room.bbox_min().x, room.bbox_min().y, room.bbox_max().x,
          room.bbox_max().y};
}

std::string polygon_path(const RoomPolygon& room, const SvgFrame& f) {
  std::string d;
  const auto& v = room.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    d += (i == 0 ? "M" : "L");
    d += format_double(f.sx(v[i].x)) + " " + format_double(f.sy(v[i].y));
  }
  d += "Z";
  return d;
}

// Monotone white -> dark blue ramp, linear in t in [0, 1].
std::string ramp_color(double t) {
  const double r0 = 255, g0 = 255, b0 = 255;
  const double r1 = 8, g1 = 48, b1 = 107;
  const auto mix = [&](double a, double b) {
    return static_cast<int>(std::lround(a + (b - a) * t));
  };
  return "rgb(" + std::to_string(mix(r0, r1)) + "," +
         std::to_string(mix(g0, g1)) + "," + std::to_string(mix(b0, b1)) + ")";
}

}  // namespace

void scatter_svg(const TrainedLocalizer& model, const Dataset& test,
                 const RoomPolygon& room, const std::string& path) {
  const SvgFrame f = frame_for(room);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
      << format_double(f.width()) << "\" height=\"" << format_double(f.height())
      << "\" viewBox=\"0 0 " << format_double(f.width()) << ' '
      << format_double(f.height()) << "\">\n";
  out << "<path d=\"" << polygon_path(room, f)
      << "\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
  // Pair segments first so markers draw on top.
  for (const auto& s : test.samples) {
    const Position pred = predict(model, s.spectrum);
    out << "<line x1=\"" << format_double(f.sx(s.position.x)) << "\" y1=\""
        << format_double(f.sy(s.position.y)) << "\" x2=\""
        << format_double(f.sx(pred.x)) << "\" y2=\""
        << format_double(f.sy(pred.y))
        << "\" stroke=\"#999999\" stroke-width=\"0.5\"/>\n";
  }
  for (const auto& s : test.samples) {
    out << "<circle cx=\"" << format_double(f.sx(s.position.x)) << "\" cy=\""
        << format_double(f.sy(s.position.y))
        << "\" r=\"3\" fill=\"blue\"/>\n";
  }
  for (const auto& s : test.samples) {
    const Position pred = predict(model, s.spectrum);
    out << "<circle cx=\"" << format_double(f.sx(pred.x)) << "\" cy=\""
        << format_double(f.sy(pred.y)) << "\" r=\"3\" fill=\"red\"/>\n";
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("write failed for " + path);
}

void heatmap_svg(const DensityGrid& grid, const RoomPolygon& room,
                 const std::string& path) {
  const SvgFrame f = frame_for(room);
  const double legend_w = 90.0;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
      << format_double(f.width() + legend_w) << "\" height=\""
      << format_double(f.height()) << "\" viewBox=\"0 0 "
      << format_double(f.width() + legend_w) << ' '
      << format_double(f.height()) << "\">\n";
  std::size_t max_count = 0;
  for (auto c : grid.counts) max_count = std::max(max_count, c);
  for (std::size_t iy = 0; iy < grid.ny; ++iy) {
    for (std::size_t ix = 0; ix < grid.nx; ++ix) {
      const std::size_t count = grid.counts[iy * grid.nx + ix];
      const double t = max_count == 0
                           ? 0.0
                           : static_cast<double>(count) /
                                 static_cast<double>(max_count);
      const double x0 = grid.origin_x + static_cast<double>(ix) * grid.cell_cm;
      const double y1 =
          grid.origin_y + static_cast<double>(iy + 1) * grid.cell_cm;
      out << "<rect x=\"" << format_double(f.sx(x0)) << "\" y=\""
          << format_double(f.sy(y1)) << "\" width=\""
          << format_double(grid.cell_cm) << "\" height=\""
          << format_double(grid.cell_cm) << "\" fill=\"" << ramp_color(t)
          << "\"/>\n";
    }
  }
  out << "<path d=\"" << polygon_path(room, f)
      << "\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
  // Legend: vertical ramp with min/max labels.
  const double lx = f.width() + 20.0;
  const double ly = kSvgMargin;
  const double lh = std::max(60.0, f.height() - 2 * kSvgMargin);
  const int steps = 20;
  for (int i = 0; i < steps; ++i) {
    const double t = 1.0 - static_cast<double>(i) / (steps - 1);
    out << "<rect x=\"" << format_double(lx) << "\" y=\""
        << format_double(ly + lh * i / steps) << "\" width=\"18\" height=\""
        << format_double(lh / steps + 1.0) << "\" fill=\"" << ramp_color(t)
        << "\"/>\n";
  }
  out << "<text x=\"" << format_double(lx + 24) << "\" y=\""
      << format_double(ly + 10) << "\" font-size=\"12\">" << max_count
      << "</text>\n";
  out << "<text x=\"" << format_double(lx + 24) << "\" y=\""
      << format_double(ly + lh) << "\" font-size=\"12\">0</text>\n";
  out << "</svg>\n";
  if (!out) throw std::runtime_error("write failed for " + path);
}

void write_summary_csv(
    const std::vector<std::pair<std::string, std::string>>& rows,
    const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "metric,value\n";
  for (const auto& [k, v] : rows) out << k << ',' << v << '\n';
}

void write_per_rp_csv(const ErrorSummary& baseline,
                      const ErrorSummary* augmented, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  if (augmented == nullptr) {
    out << "rp_id,n,mean_cm\n";
    for (const auto& r : baseline.per_rp) {
      out << r.rp_id << ',' << r.n << ',' << format_double(r.mean_cm) << '\n';
    }
    return;
  }
  out << "rp_id,n,baseline_mean_cm,augmented_mean_cm\n";
  std::map<int, std::pair<const PerRpError*, const PerRpError*>> merged;
  for (const auto& r : baseline.per_rp) merged[r.rp_id].first = &r;
  for (const auto& r : augmented->per_rp) merged[r.rp_id].second = &r;
  for (const auto& [rp, pair] : merged) {
    const std::size_t n = pair.first ? pair.first->n
                                     : (pair.second ? pair.second->n : 0);
    out << rp << ',' << n << ',';
    out << (pair.first ? format_double(pair.first->mean_cm) : "") << ',';
    out << (pair.second ? format_double(pair.second->mean_cm) : "") << '\n';
  }
}

void write_histogram_csv(const HistogramPair& hist, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "bin_lo,bin_hi,real,synth\n";
  for (std::size_t i = 0; i < hist.real_counts.size(); ++i) {
    out << format_double(hist.edges[i]) << ',' << format_double(hist.edges[i + 1])
        << ',' << hist.real_counts[i] << ',' << hist.synth_counts[i] << '\n';
  }
}

}  // namespace specloc
