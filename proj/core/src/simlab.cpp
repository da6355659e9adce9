#include "specloc/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace specloc {

void validate_lamp(const Lamp& lamp) {
  if (!std::isfinite(lamp.x) || !std::isfinite(lamp.y) ||
      !std::isfinite(lamp.z) || lamp.z <= 0.0) {
    throw std::invalid_argument("lamp position must be finite with z > 0");
  }
  if (lamp.lambert_order < 1.0 || !std::isfinite(lamp.lambert_order)) {
    throw std::invalid_argument("lambert_order must be >= 1");
  }
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    if (!std::isfinite(lamp.emission[c]) || lamp.emission[c] < 0.0) {
      throw std::invalid_argument("lamp emission must be finite and >= 0");
    }
  }
}

void validate_sensor(const SensorModel& sensor) {
  if (!(sensor.noise_rel >= 0.0 && sensor.noise_rel < 1.0)) {
    throw std::invalid_argument("noise_rel must be in [0, 1)");
  }
  if (!std::isfinite(sensor.height_cm) || sensor.height_cm < 0.0) {
    throw std::invalid_argument("sensor height must be finite and >= 0");
  }
  if (!(sensor.adc_max > 0.0)) {
    throw std::invalid_argument("adc_max must be positive");
  }
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    if (!std::isfinite(sensor.ambient[c]) || sensor.ambient[c] < 0.0) {
      throw std::invalid_argument("ambient must be finite and >= 0");
    }
  }
}

int Protocol::samples_per_point() const {
  const double n = dwell_s * rate_hz;
  const double rounded = std::round(n);
  if (!(n > 0.0) || std::abs(n - rounded) > 1e-9 || rounded < 1.0) {
    throw std::invalid_argument(
        "dwell_s * rate_hz must be a positive integer");
  }
  return static_cast<int>(rounded);
}

SensorModel default_sensor() {
  SensorModel s;
  s.ambient = Spectrum{{15, 15, 15, 15, 15, 15, 15, 15, 50, 10, 0}};
  return s;
}

std::vector<Lamp> default_lamps() {
  // Four ceiling lamps with distinct spectral profiles over the two arms
  // and the base of the U; distinct profiles are what makes the
  // fingerprints informative. Emission weights are in counts*cm^2; the
  // Flicker entry is the lamp's modulation tag.
  std::vector<Lamp> lamps(4);

  // Warm white over the left arm.
  lamps[0] = Lamp{100, 650, 400,
                  Spectrum{{24e6, 29e6, 39e6, 53e6, 78e6, 107e6, 126e6, 107e6,
                            559e6, 61e6, 120}},
                  1.0};
  // Cool white over the right arm.
  lamps[1] = Lamp{500, 650, 400,
                  Spectrum{{122e6, 136e6, 112e6, 92e6, 73e6, 53e6, 36e6, 24e6,
                            656e6, 19e6, 60}},
                  1.0};
  // Neutral over the west base.
  lamps[2] = Lamp{150, 120, 400,
                  Spectrum{{73e6, 78e6, 83e6, 87e6, 85e6, 80e6, 73e6, 63e6,
                            622e6, 36e6, 0}},
                  1.0};
  // Green-peaked over the east base.
  lamps[3] = Lamp{450, 120, 400,
                  Spectrum{{34e6, 53e6, 97e6, 141e6, 126e6, 83e6, 49e6, 32e6,
                            608e6, 29e6, 30}},
                  1.0};
  return lamps;
}

Spectrum noiseless_reading(const std::vector<Lamp>& lamps,
                           const SensorModel& sensor, const Position& p) {
  if (lamps.empty()) {
    throw std::invalid_argument("at least one lamp required");
  }
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw std::invalid_argument("position must be finite");
  }
  Spectrum reading = sensor.ambient;
  for (const auto& lamp : lamps) {
    const double dx = p.x - lamp.x;
    const double dy = p.y - lamp.y;
    const double dz = lamp.z - sensor.height_cm;
    const double d2 = dx * dx + dy * dy + dz * dz;
    if (d2 == 0.0) {
      throw std::runtime_error("sensor coincides with a lamp");
    }
    reading[kFlickerChannel] += lamp.emission[kFlickerChannel];
    if (dz <= 0.0) continue;  // lamp below the receiver plane: no irradiance
    const double d = std::sqrt(d2);
    const double cos_theta = dz / d;
    const double gain =
        std::pow(cos_theta, lamp.lambert_order) * cos_theta / d2;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      if (c == kFlickerChannel) continue;
      reading[c] += lamp.emission[c] * gain;
    }
  }
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    reading[c] = std::clamp(reading[c], 0.0, sensor.adc_max);
  }
  return reading;
}

Spectrum sample_reading(const std::vector<Lamp>& lamps,
                        const SensorModel& sensor, const Position& p,
                        Rng& rng) {
  const Spectrum clean = noiseless_reading(lamps, sensor, p);
  Spectrum noisy;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    const double eps = sensor.noise_rel * rng.normal();
    const double v = std::clamp(clean[c] * (1.0 + eps), 0.0, sensor.adc_max);
    noisy[c] = static_cast<double>(std::llround(v));
  }
  return noisy;
}

Dataset generate_corpus(const RoomPolygon& room, const ReferenceLayout& layout,
                        const std::vector<Lamp>& lamps,
                        const SensorModel& sensor, const Protocol& protocol,
                        std::uint64_t seed) {
  for (const auto& lamp : lamps) validate_lamp(lamp);
  validate_sensor(sensor);
  const int per_point = protocol.samples_per_point();
  std::vector<LabeledSample> samples;
  samples.reserve(layout.points.size() * static_cast<std::size_t>(per_point));
  for (std::size_t rp = 0; rp < layout.points.size(); ++rp) {
    const Position& point = layout.points[rp];
    if (!contains(room, point)) {
      throw std::invalid_argument("reference point outside the room");
    }
    Rng rng(seed ^ static_cast<std::uint64_t>(rp));
    for (int k = 0; k < per_point; ++k) {
      LabeledSample s;
      s.spectrum = sample_reading(lamps, sensor, point, rng);
      s.position = point;
      s.rp_id = static_cast<int>(rp);
      s.seq = k;
      samples.push_back(std::move(s));
    }
  }
  return Dataset::from_samples(std::move(samples), Provenance::simulated,
                               static_cast<int>(layout.points.size()));
}

}  // namespace specloc
