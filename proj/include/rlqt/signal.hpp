#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "rlqt/errors.hpp"

namespace rlqt {

/// Deterministic scalar signal on [0, T].
///
/// square: +amplitude on the first half of each period, −amplitude on the
/// second, frequency in Hz. sinusoid: amplitude·sin(frequency·t), frequency in
/// rad/s. exp_decay: amplitude·exp(−rate·t). white_noise: N(0, stddev²)
/// samples held for `hold` seconds, drawn once from a seeded generator.
struct Signal {
  enum class Kind { zero, constant, square, sinusoid, exp_decay, white_noise };

  Kind kind = Kind::zero;
  double amplitude = 0.0;
  double frequency = 0.0;
  double rate = 0.0;
  double stddev = 0.0;
  std::uint64_t seed = 0;
  double hold = 0.0;
  std::shared_ptr<const std::vector<double>> samples;

  static Signal zero() { return {}; }
  static Signal constant(double value) {
    Signal s;
    s.kind = Kind::constant;
    s.amplitude = value;
    return s;
  }
  static Signal square(double amplitude, double hz) {
    if (!(hz > 0.0)) throw ConfigError("square wave frequency must be positive");
    Signal s;
    s.kind = Kind::square;
    s.amplitude = amplitude;
    s.frequency = hz;
    return s;
  }
  static Signal sinusoid(double amplitude, double rad_per_s) {
    Signal s;
    s.kind = Kind::sinusoid;
    s.amplitude = amplitude;
    s.frequency = rad_per_s;
    return s;
  }
  static Signal exp_decay(double amplitude, double rate) {
    Signal s;
    s.kind = Kind::exp_decay;
    s.amplitude = amplitude;
    s.rate = rate;
    return s;
  }
  /// Samples cover [0, horizon] with one extra sample for the closing point.
  static Signal white_noise(double stddev, std::uint64_t seed, double hold, double horizon) {
    if (!(hold > 0.0) || !(horizon >= 0.0)) {
      throw ConfigError("white noise needs a positive hold time and a horizon");
    }
    if (!(stddev >= 0.0)) throw ConfigError("white noise stddev must be non-negative");
    Signal s;
    s.kind = Kind::white_noise;
    s.stddev = stddev;
    s.seed = seed;
    s.hold = hold;
    const auto count = static_cast<std::size_t>(std::llround(horizon / hold)) + 2;
    auto v = std::make_shared<std::vector<double>>(count);
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (double& x : *v) x = stddev * nd(gen);
    s.samples = std::move(v);
    return s;
  }

  /// Noise sample with index k (other kinds ignore k and return 0).
  double sample(std::size_t k) const {
    if (kind != Kind::white_noise) return 0.0;
    return (*samples)[std::min(k, samples->size() - 1)];
  }

  double operator()(double t) const {
    switch (kind) {
      case Kind::zero:
        return 0.0;
      case Kind::constant:
        return amplitude;
      case Kind::square: {
        const double phase = t * frequency - std::floor(t * frequency);
        return phase < 0.5 ? amplitude : -amplitude;
      }
      case Kind::sinusoid:
        return amplitude * std::sin(frequency * t);
      case Kind::exp_decay:
        return amplitude * std::exp(-rate * t);
      case Kind::white_noise: {
        const double idx = std::floor(t / hold + 1e-9);
        return sample(idx < 0.0 ? 0 : static_cast<std::size_t>(idx));
      }
    }
    return 0.0;
  }

  std::string describe() const {
    switch (kind) {
      case Kind::zero:
        return "zero";
      case Kind::constant:
        return "constant(" + std::to_string(amplitude) + ")";
      case Kind::square:
        return "square(amplitude=" + std::to_string(amplitude) +
               ", hz=" + std::to_string(frequency) + ")";
      case Kind::sinusoid:
        return "sinusoid(amplitude=" + std::to_string(amplitude) +
               ", rad_s=" + std::to_string(frequency) + ")";
      case Kind::exp_decay:
        return "exp_decay(amplitude=" + std::to_string(amplitude) +
               ", rate=" + std::to_string(rate) + ")";
      case Kind::white_noise:
        return "white_noise(std=" + std::to_string(stddev) + ", seed=" + std::to_string(seed) +
               ")";
    }
    return "?";
  }
};

inline double degrees_to_radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace rlqt
