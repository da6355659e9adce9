#pragma once

#include <cstdint>
#include <vector>

#include "specloc/geometry.hpp"
#include "specloc/rng.hpp"
#include "specloc/spectra.hpp"

namespace specloc {

// Ceiling lamp with a Lambertian radiation pattern. emission holds the
// per-channel radiant weight (counts*cm^2 at 1 cm); its Flicker entry is the
// lamp's modulation tag, added to the Flicker channel independent of
// geometry.
struct Lamp {
  double x = 0.0;
  double y = 0.0;
  double z = 250.0;  // cm above the floor, must be > 0
  Spectrum emission;
  double lambert_order = 1.0;  // m >= 1
};

void validate_lamp(const Lamp& lamp);

struct SensorModel {
  double height_cm = 10.0;   // receiver plane above the floor
  double noise_rel = 0.02;   // multiplicative Gaussian sigma, in [0, 1)
  Spectrum ambient;          // additive counts per channel
  double adc_max = kAdcMax;
};

void validate_sensor(const SensorModel& sensor);

// The collection protocol: stationary dwell at each reference point.
struct Protocol {
  double dwell_s = 30.0;
  double rate_hz = 4.0;

  // dwell_s * rate_hz, which must be a positive integer.
  int samples_per_point() const;
};

SensorModel default_sensor();
std::vector<Lamp> default_lamps();

// Channel c = ambient[c] + sum over lamps of emission[c] * cos^m(theta) *
// cos(theta) / d^2, with d the 3-D lamp-to-sensor distance and theta the
// angle off the lamp's downward normal (the receiver faces straight up).
// The Flicker channel is ambient[Flicker] + the sum of lamp flicker tags,
// independent of position. Result is clamped to [0, adc_max]. Throws when
// the sensor coincides with a lamp.
Spectrum noiseless_reading(const std::vector<Lamp>& lamps,
                           const SensorModel& sensor, const Position& p);

// noiseless * (1 + eps) per channel with eps ~ N(0, noise_rel), drawn in
// channel order from rng, then clamped and rounded to the nearest integer.
Spectrum sample_reading(const std::vector<Lamp>& lamps,
                        const SensorModel& sensor, const Position& p,
                        Rng& rng);

// One dwell per reference point in canonical order; per-point sample count
// is protocol.samples_per_point(), seq runs 0..n-1. Each reference point
// draws from its own stream seeded with seed ^ rp_id, so generation can be
// parallelized without changing the output.
Dataset generate_corpus(const RoomPolygon& room, const ReferenceLayout& layout,
                        const std::vector<Lamp>& lamps,
                        const SensorModel& sensor, const Protocol& protocol,
                        std::uint64_t seed);

}  // namespace specloc
