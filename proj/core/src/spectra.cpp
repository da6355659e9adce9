#include "specloc/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "specloc/numfmt.hpp"

namespace specloc {

namespace {

std::string channel_error(std::size_t c, const std::string& what) {
  return std::string("channel ") + kChannelNames[c] + ": " + what;
}

}  // namespace

void validate_spectrum(const Spectrum& s, bool check_adc) {
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    const double v = s[c];
    if (!std::isfinite(v)) {
      throw std::invalid_argument(channel_error(c, "non-finite value"));
    }
    if (v < 0.0) {
      throw std::invalid_argument(
          channel_error(c, "negative value " + format_double(v)));
    }
    if (check_adc && v > kAdcMax) {
      throw std::invalid_argument(
          channel_error(c, "value " + format_double(v) + " exceeds ADC max"));
    }
  }
}

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::measured:
      return "measured";
    case Provenance::simulated:
      return "simulated";
    case Provenance::synthetic:
      return "synthetic";
    case Provenance::mixed:
      return "mixed";
  }
  return "unknown";
}

bool canonical_less(const LabeledSample& a, const LabeledSample& b) {
  return std::tie(a.position.x, a.position.y, a.rp_id, a.seq) <
         std::tie(b.position.x, b.position.y, b.rp_id, b.seq);
}

Dataset Dataset::from_samples(std::vector<LabeledSample> samples,
                              Provenance provenance, int rp_count) {
  for (const auto& s : samples) {
    validate_spectrum(s.spectrum);
    if (!std::isfinite(s.position.x) || !std::isfinite(s.position.y)) {
      throw std::invalid_argument("sample position must be finite");
    }
    if (s.seq < 0) {
      throw std::invalid_argument("sample seq must be >= 0");
    }
    if (s.rp_id && (*s.rp_id < 0 || (rp_count >= 0 && *s.rp_id >= rp_count))) {
      throw std::invalid_argument("rp_id " + std::to_string(*s.rp_id) +
                                  " out of range");
    }
  }
  std::stable_sort(samples.begin(), samples.end(), canonical_less);
  Dataset ds;
  ds.samples = std::move(samples);
  ds.provenance = provenance;
  return ds;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

[[noreturn]] void csv_error(const std::string& path, std::size_t line_no,
                            const std::string& column,
                            const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) +
                           (column.empty() ? "" : " column " + column) + ": " +
                           what);
}

}  // namespace

Dataset load_csv(const std::string& path, Provenance provenance) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    csv_error(path, 1, "", "missing header row");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();

  // Header maps column positions to fields; order is free on load, the
  // canonical layout is enforced on save.
  const auto header = split_fields(line);
  constexpr int kX = -1, kY = -2, kRp = -3, kSeq = -4, kSource = -5;
  std::vector<int> col_kind(header.size());
  std::array<bool, kNumChannels> seen_channel{};
  bool seen_x = false, seen_y = false, seen_rp = false, seen_seq = false,
       seen_source = false;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& name = header[i];
    auto it = std::find_if(kChannelNames.begin(), kChannelNames.end(),
                           [&](const char* n) { return name == n; });
    if (it != kChannelNames.end()) {
      const auto c = static_cast<std::size_t>(it - kChannelNames.begin());
      if (seen_channel[c]) csv_error(path, 1, name, "duplicate column");
      seen_channel[c] = true;
      col_kind[i] = static_cast<int>(c);
    } else if (name == "x" && !seen_x) {
      seen_x = true;
      col_kind[i] = kX;
    } else if (name == "y" && !seen_y) {
      seen_y = true;
      col_kind[i] = kY;
    } else if (name == "rp_id" && !seen_rp) {
      seen_rp = true;
      col_kind[i] = kRp;
    } else if (name == "seq" && !seen_seq) {
      seen_seq = true;
      col_kind[i] = kSeq;
    } else if (name == "source" && !seen_source) {
      seen_source = true;
      col_kind[i] = kSource;
    } else {
      csv_error(path, 1, name, "unknown or duplicate column");
    }
  }
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    if (!seen_channel[c]) csv_error(path, 1, kChannelNames[c], "missing column");
  }
  if (!seen_x) csv_error(path, 1, "x", "missing column");
  if (!seen_y) csv_error(path, 1, "y", "missing column");

  std::vector<LabeledSample> samples;
  std::size_t line_no = 1;
  bool any_source = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      csv_error(path, line_no, "",
                "expected " + std::to_string(header.size()) + " fields, got " +
                    std::to_string(fields.size()));
    }
    LabeledSample s;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const std::string& cell = fields[i];
      const int kind = col_kind[i];
      try {
        if (kind >= 0) {
          s.spectrum[static_cast<std::size_t>(kind)] = parse_double(cell);
        } else if (kind == kX) {
          s.position.x = parse_double(cell);
        } else if (kind == kY) {
          s.position.y = parse_double(cell);
        } else if (kind == kRp) {
          if (!cell.empty()) s.rp_id = static_cast<int>(parse_long(cell));
        } else if (kind == kSeq) {
          s.seq = static_cast<int>(parse_long(cell));
        } else if (kind == kSource) {
          if (cell == "measured") {
            s.source = Provenance::measured;
          } else if (cell == "synthetic") {
            s.source = Provenance::synthetic;
          } else if (!cell.empty()) {
            throw std::invalid_argument("unknown source '" + cell + "'");
          }
          any_source = any_source || s.source.has_value();
        }
      } catch (const std::exception& e) {
        csv_error(path, line_no, header[i], e.what());
      }
    }
    try {
      validate_spectrum(s.spectrum);
    } catch (const std::exception& e) {
      csv_error(path, line_no, "", e.what());
    }
    samples.push_back(std::move(s));
  }

  // A file without a seq column still needs a total canonical order:
  // number rows by appearance within each (x, y, rp_id) group.
  if (!seen_seq) {
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return std::tie(samples[a].position.x,
                                       samples[a].position.y,
                                       samples[a].rp_id) <
                              std::tie(samples[b].position.x,
                                       samples[b].position.y,
                                       samples[b].rp_id);
                     });
    int seq = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k > 0) {
        const auto& prev = samples[order[k - 1]];
        const auto& cur = samples[order[k]];
        const bool same_group = prev.position == cur.position &&
                                prev.rp_id == cur.rp_id;
        seq = same_group ? seq + 1 : 0;
      } else {
        seq = 0;
      }
      samples[order[k]].seq = seq;
    }
  }

  return Dataset::from_samples(std::move(samples),
                               any_source ? Provenance::mixed : provenance);
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  const bool with_source = ds.provenance == Provenance::mixed;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    out << kChannelNames[c] << ',';
  }
  out << "x,y,rp_id,seq";
  if (with_source) out << ",source";
  out << '\n';
  for (const auto& s : ds.samples) {
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      out << format_double(s.spectrum[c]) << ',';
    }
    out << format_double(s.position.x) << ',' << format_double(s.position.y)
        << ',';
    if (s.rp_id) out << *s.rp_id;
    out << ',' << s.seq;
    if (with_source) {
      out << ',';
      if (s.source) out << provenance_name(*s.source);
    }
    out << '\n';
  }
  if (!out) {
    throw std::runtime_error("write failed for " + path);
  }
}

std::vector<Spectrum> load_spectra_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    csv_error(path, 1, "", "missing header row");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  if (header.size() != kNumChannels) {
    csv_error(path, 1, "", "expected the 11 channel columns");
  }
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    if (header[c] != kChannelNames[c]) {
      csv_error(path, 1, header[c], "expected channel column order");
    }
  }
  std::vector<Spectrum> spectra;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != kNumChannels) {
      csv_error(path, line_no, "", "expected 11 fields");
    }
    Spectrum s;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      try {
        s[c] = parse_double(fields[c]);
      } catch (const std::exception& e) {
        csv_error(path, line_no, kChannelNames[c], e.what());
      }
    }
    try {
      validate_spectrum(s);
    } catch (const std::exception& e) {
      csv_error(path, line_no, "", e.what());
    }
    spectra.push_back(s);
  }
  return spectra;
}

void save_spectra_csv(const std::vector<Spectrum>& spectra,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    out << kChannelNames[c] << (c + 1 < kNumChannels ? "," : "\n");
  }
  for (const auto& s : spectra) {
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      out << format_double(s[c]) << (c + 1 < kNumChannels ? "," : "\n");
    }
  }
  if (!out) {
    throw std::runtime_error("write failed for " + path);
  }
}

std::vector<Spectrum> strip_coordinates(const Dataset& ds) {
  std::vector<Spectrum> spectra;
  spectra.reserve(ds.size());
  for (const auto& s : ds.samples) spectra.push_back(s.spectrum);
  return spectra;
}

Spectrum mean_spectrum(const std::vector<Spectrum>& spectra) {
  if (spectra.empty()) {
    throw std::invalid_argument("mean_spectrum: empty input");
  }
  Spectrum mean;
  for (const auto& s : spectra) {
    for (std::size_t c = 0; c < kNumChannels; ++c) mean[c] += s[c];
  }
  const double n = static_cast<double>(spectra.size());
  for (std::size_t c = 0; c < kNumChannels; ++c) mean[c] /= n;
  return mean;
}

double pattern_distinctness(const Spectrum& a, const Spectrum& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t c = 0; c < kNumFChannels; ++c) {
    dot += a[c] * b[c];
    na += a[c] * a[c];
    nb += b[c] * b[c];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

Dataset normalize_to_anchor(const Dataset& ds, const Spectrum& anchor_ref,
                            const Spectrum& anchor_now) {
  std::array<double, kNumChannels> ratio;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    if (c == kFlickerChannel) {
      ratio[c] = 1.0;  // modulation channel travels unscaled
      continue;
    }
    if (anchor_now[c] == 0.0) {
      throw std::invalid_argument(channel_error(c, "anchor_now is zero"));
    }
    ratio[c] = anchor_ref[c] / anchor_now[c];
  }
  Dataset out = ds;
  for (auto& s : out.samples) {
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      const double v = s.spectrum[c] * ratio[c];
      if (!std::isfinite(v) || v > kAdcMax) {
        throw std::runtime_error(
            channel_error(c, "scaled value " + format_double(v) +
                                 " leaves the valid range"));
      }
      s.spectrum[c] = v;
    }
  }
  return out;
}

}  // namespace specloc
