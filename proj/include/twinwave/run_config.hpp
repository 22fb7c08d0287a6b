#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "twinwave/model.hpp"

namespace twinwave {

/// How the pump photons are shared between triplets.
enum class PumpPartition { coupling_squared, uniform };

inline std::string to_string(PumpPartition p) { return p == PumpPartition::uniform ? "uniform" : "coupling_squared"; }

inline PumpPartition parse_partition(const std::string& s) {
  if (s == "coupling_squared") return PumpPartition::coupling_squared;
  if (s == "uniform") return PumpPartition::uniform;
  throw std::invalid_argument("unknown pump partition '" + s + "' (expected coupling_squared or uniform)");
}

/// Optional camera model applied after synthesis: gain * I + dark + N(0, read_noise).
struct DetectorNoise {
  double gain = 1.0;
  double dark_level = 0.0;
  double read_noise = 0.0;

  bool enabled() const { return gain != 1.0 || dark_level != 0.0 || read_noise != 0.0; }
  void validate() const {
    if (!(gain > 0)) throw std::invalid_argument("detector.gain must be positive");
    if (!(dark_level >= 0)) throw std::invalid_argument("detector.dark_level must be non-negative");
    if (!(read_noise >= 0)) throw std::invalid_argument("detector.read_noise must be non-negative");
  }
};

struct RunConfig {
  ModelConfig model;
  std::size_t shots = 2000;
  std::uint64_t seed = 1;
  std::size_t z_steps = 400;  // minimum RK4 steps per triplet
  std::size_t workers = 0;    // 0: hardware concurrency
  PumpPartition partition = PumpPartition::coupling_squared;
  DetectorNoise noise;

  void validate() const {
    model.validate();
    noise.validate();
    if (shots < 1) throw std::invalid_argument("run.shots must be at least 1");
    if (z_steps < 1) throw std::invalid_argument("run.z_steps must be at least 1");
  }
};

}  // namespace twinwave
