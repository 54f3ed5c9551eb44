#pragma once

// Experiment orchestration: state preparation along the physical chain,
// record generation, reconstruction, rate fitting and the loss sweep.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cvtomo/config.hpp"
#include "cvtomo/homodyne.hpp"
#include "cvtomo/tomography.hpp"

namespace cvtomo {

/// States along the chain for one configuration, all at config.cutoff.
struct PreparedStates {
  DensityMatrix squeezed;  ///< OPA output
  DensityMatrix heralded;  ///< after the tap and a click
  double success_probability = 0.0;
  double jitter_efficiency = 1.0;
  DensityMatrix jittered;  ///< heralded state seen through the fixed mode
  DensityMatrix detected;  ///< after eta_pre: the state the nominal POVM reconstructs
  DensityMatrix measured;  ///< after the whole physical chain: what the ideal marginals sample
};

PreparedStates prepare_states(const ExperimentConfig& config);

/// Jitter efficiency for the configured filter and jitter.
double config_jitter_efficiency(const ExperimentConfig& config);

struct SimulationResult {
  std::vector<QuadratureRecord> records;
  PreparedStates states;
  std::optional<double> herald_rate_hz;
};

/// `rate_amplitude_hz` is A of the rate model, referenced to a 5% tap.
SimulationResult simulate_experiment(const ExperimentConfig& config, int workers = 1,
                                     std::optional<double> rate_amplitude_hz = std::nullopt);

/// Herald rate A sinh^2(r) (R / 0.05).
double herald_rate(double amplitude_hz, double r, double tap_reflectance);

/// Binned POVM the reconstruction uses for `config` at `dim`.
MeasurementModel reconstruction_model(const ExperimentConfig& config, int dim);

struct RateModelFit {
  double amplitude_hz = 0.0;
  double coupling = 0.0;  ///< mW^-1/2
  std::vector<double> residuals;  ///< (model - data) / data per point

  double predict(double pump_mw) const;
};

/// Least squares on log-rate for R(P) = A sinh^2(c sqrt(P)). Two points are
/// fitted exactly by a root find on the ratio.
RateModelFit fit_rates(std::span<const double> powers_mw, std::span<const double> rates_hz);

struct SweepRow {
  double loss_db = 0.0;
  double w00 = 0.0;
  double w00_err = 0.0;  ///< bootstrap; NaN when not requested
  double fidelity = 0.0;  ///< to the zero-added-loss reconstruction
  int iterations = 0;
  bool converged = false;
  bool monotone = true;
};

struct SweepOptions {
  int recon_dim = 15;
  int workers = 1;
  int bootstrap_resamples = 0;  ///< 0 disables error bars
  MleOptions mle;
};

/// One simulate-and-reconstruct run per added loss; every run reuses the base
/// seed. The fidelity reference is a run at 0 dB, which is added if absent.
std::vector<SweepRow> sweep_loss(const ExperimentConfig& base, std::span<const double> added_loss_db,
                                 const SweepOptions& options = {});

}  // namespace cvtomo
