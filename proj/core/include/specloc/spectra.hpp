#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace specloc {

inline constexpr std::size_t kNumChannels = 11;
inline constexpr std::size_t kNumFChannels = 8;
inline constexpr std::size_t kClearChannel = 8;
inline constexpr std::size_t kNirChannel = 9;
inline constexpr std::size_t kFlickerChannel = 10;
inline constexpr double kAdcMax = 65535.0;  // 16-bit sensor ceiling

// Canonical channel order for every dataset, model input and CSV file.
inline constexpr std::array<const char*, kNumChannels> kChannelNames = {
    "F1", "F2", "F3", "F4", "F5", "F6", "F7", "F8", "Clear", "NIR", "Flicker"};

// One sensor reading: per-channel intensity counts in canonical order.
struct Spectrum {
  std::array<double, kNumChannels> channels{};

  double& operator[](std::size_t i) { return channels[i]; }
  double operator[](std::size_t i) const { return channels[i]; }
  bool operator==(const Spectrum&) const = default;
};

// Throws std::invalid_argument naming the offending channel. Values must be
// finite and non-negative; sensor-shaped data (simulator output, CSV rows)
// must also respect the ADC ceiling. Derived vectors such as channel means
// may exceed the ceiling and are checked with check_adc = false.
void validate_spectrum(const Spectrum& s, bool check_adc = true);

// Floor position in cm from the west (x) and south (y) walls. Membership in
// the room polygon is not an invariant: pseudo-labels may fall outside and
// get filtered downstream.
struct Position {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Position&) const = default;
};

enum class Provenance { measured, simulated, synthetic, mixed };

const char* provenance_name(Provenance p);

struct LabeledSample {
  Spectrum spectrum;
  Position position;
  std::optional<int> rp_id;  // reference-point index when collected on the grid
  int seq = 0;               // sample index within its reference point
  // Per-sample origin, set only in mixed datasets (measured or synthetic).
  std::optional<Provenance> source;

  bool operator==(const LabeledSample&) const = default;
};

// Canonical dataset order: ascending (x, y, rp_id, seq); an absent rp_id
// sorts before any present one.
bool canonical_less(const LabeledSample& a, const LabeledSample& b);

// Ordered collection of labeled spectra. Samples are kept in canonical
// order; provenance is in-memory metadata and is not persisted to CSV
// (except for the per-sample source column of mixed datasets).
struct Dataset {
  std::vector<LabeledSample> samples;
  Provenance provenance = Provenance::measured;

  static const std::array<const char*, kNumChannels>& channel_names() {
    return kChannelNames;
  }

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  // Sorts canonically and validates every sample. rp_count < 0 skips the
  // rp_id range check.
  static Dataset from_samples(std::vector<LabeledSample> samples,
                              Provenance provenance, int rp_count = -1);
};

// CSV persistence. Header: F1,...,Flicker,x,y,rp_id,seq (a trailing
// `source` column is written for mixed datasets and accepted on load).
// Numbers use the shortest round-trip representation, `\n` line endings;
// load(save(ds)) reproduces ds's samples exactly. Errors report the file
// line and column name.
Dataset load_csv(const std::string& path,
                 Provenance provenance = Provenance::measured);
void save_csv(const Dataset& ds, const std::string& path);

// Coordinate-free spectra file: the 11 channel columns only.
std::vector<Spectrum> load_spectra_csv(const std::string& path);
void save_spectra_csv(const std::vector<Spectrum>& spectra,
                      const std::string& path);

// Spectra only, canonical order preserved.
std::vector<Spectrum> strip_coordinates(const Dataset& ds);

// Channel-wise arithmetic mean. Throws on an empty list.
Spectrum mean_spectrum(const std::vector<Spectrum>& spectra);

// Cosine distance 1 - a.b/(|a||b|) over the eight F-channels only; 0 when
// either F-vector is all-zero. Symmetric, range [0, 2].
double pattern_distinctness(const Spectrum& a, const Spectrum& b);

// Per-channel rescaling by anchor_ref[c] / anchor_now[c]. The Flicker
// channel is a modulation detector, not a radiometric intensity, and passes
// through unscaled. Throws if a scaling channel of anchor_now is zero or a
// scaled value leaves [0, kAdcMax] or turns non-finite.
Dataset normalize_to_anchor(const Dataset& ds, const Spectrum& anchor_ref,
                            const Spectrum& anchor_now);

}  // namespace specloc
