#pragma once

// Iterative maximum-likelihood state reconstruction (R rho R) from binned
// homodyne data, plus phase-stratified bootstrap error bars.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cvtomo/fock.hpp"
#include "cvtomo/homodyne.hpp"

namespace cvtomo {

/// Histogram of records over the model's (phase, bin) cells.
struct BinnedData {
  RealMatrix counts;  ///< n_phases x n_bins
  double total = 0.0;

  static BinnedData from_records(std::span<const QuadratureRecord> records, const MeasurementModel& model);
};

struct MleOptions {
  double tol = 1e-9;  ///< stop when the log-likelihood gain per sample drops below this
  int max_iter = 2000;
  int workers = 1;
};

struct MleResult {
  DensityMatrix rho;
  int iterations = 0;
  double final_loglik = 0.0;
  bool converged = false;
  std::vector<double> loglik_trace;  ///< entry 0 is the starting point
  bool floor_engaged = false;        ///< some p_j was clamped to 1e-12
  bool monotone = true;              ///< no decrease beyond 1e-12 relative slack
};

inline constexpr double kProbabilityFloor = 1e-12;

/// p(phase, bin) = tr(Pi rho) for every cell.
RealMatrix cell_probabilities(const DensityMatrix& rho, const MeasurementModel& model, int workers = 1);

double loglikelihood(const DensityMatrix& rho, const BinnedData& data, const MeasurementModel& model);
double loglikelihood(const DensityMatrix& rho, std::span<const QuadratureRecord> records,
                     const MeasurementModel& model);

/// Starts from the maximally mixed state. `data.counts` may hold frequencies
/// rather than integers (total = their sum).
MleResult mle_reconstruct(const BinnedData& data, const MeasurementModel& model, const MleOptions& options = {});
MleResult mle_reconstruct(std::span<const QuadratureRecord> records, const MeasurementModel& model,
                          const MleOptions& options = {});

struct BootstrapSummary {
  std::string statistic;
  double point_estimate = 0.0;
  double std_error = 0.0;
  int n_resamples = 0;
  int n_failed = 0;
  std::vector<double> values;  ///< statistic per successful resample, in resample order
};

using Statistic = std::function<double(const DensityMatrix&)>;

/// Resamples records with replacement inside each phase, reruns the MLE and
/// reports the sample standard deviation of `statistic`. Resample b uses the
/// substream (seed, b), so results do not depend on `workers`.
BootstrapSummary bootstrap(std::span<const QuadratureRecord> records, const MeasurementModel& model,
                           const Statistic& statistic, const std::string& name, int n_resamples,
                           std::uint64_t seed, const MleOptions& options = {});

}  // namespace cvtomo
