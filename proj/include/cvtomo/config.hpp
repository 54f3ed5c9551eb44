#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvtomo/channels.hpp"
#include "cvtomo/states.hpp"

namespace cvtomo {

/// Everything that defines one simulated experiment. JSON field names match
/// the member names; unknown keys are rejected.
struct ExperimentConfig {
  int cutoff = 40;
  std::optional<double> pump_power_mw = 1.0;  ///< exactly one of pump_power_mw and r
  double coupling = 0.17964774578332346;      ///< mW^-1/2, r = coupling sqrt(P)
  std::optional<double> r;
  double tap_reflectance = 0.05;
  double eta_pre = 0.8;
  double eta_post = 1.0;
  double psa_gain_db = 20.0;
  double added_loss_db = 0.0;
  double filter_fwhm_hz = 1e9;
  double jitter_fwhm_s = 130e-12;
  double detector_eta = 0.8;
  double dark_prob = 0.0;
  std::vector<double> phases_rad = uniform_phases(12);
  std::size_t n_samples = 100000;
  std::uint64_t seed = 1;

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;

  SqueezeSpec squeeze() const;
  /// Gaussian sigma of the herald timing error.
  double jitter_sigma_s() const;
  /// Chain the light actually traverses, added loss included.
  DetectionChain physical_chain() const;
  /// Chain assumed by the reconstruction: the added loss is not known to it.
  DetectionChain nominal_chain() const;

  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig load(const std::string& path);

  /// SHA-256 of the canonical JSON, hex encoded.
  std::string hash() const;
};

std::string sha256_hex(const std::string& bytes);

}  // namespace cvtomo
