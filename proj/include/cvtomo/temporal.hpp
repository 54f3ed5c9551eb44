#pragma once

// Temporal-mode layer: wavepackets on uniform time grids, synthetic detector
// traces, baseline-subtracted PCA, and projection of traces onto a mode.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvtomo/fock.hpp"

namespace cvtomo {

struct ExperimentConfig;

struct TimeGrid {
  double start = 0.0;  ///< s
  double step = 0.0;   ///< s
  int size = 0;

  double time(int i) const { return start + step * i; }
  double span() const { return step * (size - 1); }
  static TimeGrid centered(double half_width, double step);
};

/// Real wavepacket f(t) with sum f^2 dt = 1 (checked to 1e-8).
class ModeFunction {
 public:
  ModeFunction(TimeGrid grid, std::vector<double> values, std::optional<double> gamma = std::nullopt);
  /// Rescales `values` to unit norm first.
  static ModeFunction normalized(TimeGrid grid, std::vector<double> values,
                                 std::optional<double> gamma = std::nullopt);

  const TimeGrid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::optional<double> gamma() const { return gamma_; }
  double overlap(const ModeFunction& other) const;

 private:
  TimeGrid grid_;
  std::vector<double> values_;
  std::optional<double> gamma_;
};

/// f(t) = sqrt(gamma) exp(-gamma |t - t0|), the impulse response of a
/// Lorentzian amplitude filter.
struct DoubleExpShape {
  double gamma;  ///< s^-1
  double t0;     ///< s

  double operator()(double t) const;
  /// Closed-form autocorrelation e^{-gamma|tau|}(1 + gamma|tau|).
  double autocorrelation(double tau) const;
};

/// Decay rate whose power spectrum (gamma^2 + w^2)^-2 has the given FWHM (Hz).
double double_exp_gamma(double fwhm_hz);

/// Double-exponential mode on `grid`. Requires >= 20 samples per 1/gamma
/// (ResolutionError) and a grid span >= 10/gamma (InvalidMode).
ModeFunction double_exp_mode(double fwhm_hz, double t0, const TimeGrid& grid);

/// Samples an analytic shape on a (possibly coarse) digitizer grid and
/// renormalizes; only the span requirement applies.
ModeFunction sample_shape(const DoubleExpShape& shape, const TimeGrid& grid);

struct Spectrum {
  std::vector<double> freq_hz;  ///< ascending, centered on 0
  std::vector<double> power;    ///< |f~|^2, peak-normalized
  std::vector<double> density;  ///< |f~|^2 in s (f~ = dt * DFT)
  double bin_width_hz = 0.0;
  double fwhm_hz = 0.0;
};

/// Zero-padded DFT power spectrum; FWHM from linear interpolation at half maximum.
Spectrum spectrum(const ModeFunction& mode, int oversample = 32);

/// n_traces x n_samples, row-major; every trace is aligned on its herald.
struct TraceMatrix {
  using Data = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Data data;
  double sample_rate = 0.0;  ///< Hz
  int herald_index = 0;
  /// LO phase per trace; files do not store it, trace i uses phases[i % K].
  std::vector<double> phases;

  int n_traces() const { return static_cast<int>(data.rows()); }
  int n_samples() const { return static_cast<int>(data.cols()); }
  TimeGrid grid() const;
};

/// What the synthesizer needs to know about the physics.
struct TraceModel {
  DensityMatrix signal;      ///< measured single-mode state carried by heralded traces
  DensityMatrix background;  ///< measured state of every other mode (Gaussian)
  DoubleExpShape shape;
  double jitter_sigma = 0.0;  ///< s
  std::vector<double> phases;
};

struct TraceOptions {
  double sample_rate = 20e9;
  double half_window = 2e-9;  ///< s on each side of the herald
  bool background = true;
  std::optional<double> fixed_quadrature;
  std::optional<double> jitter_sigma;  ///< overrides the model's value
  int workers = 1;
};

struct TracePair {
  TraceMatrix heralded;
  TraceMatrix baseline;
  std::vector<double> quadratures;  ///< planted q per heralded trace
  std::vector<double> jitters;      ///< herald timing error per heralded trace, s
};

/// Heralded trace i: q_i f(t - tau_i) + n_perp(t), where q_i is drawn from the
/// signal marginal at phase phases[i % K], tau_i ~ N(0, sigma^2), and n_perp is
/// white background noise with the background state's quadrature variance,
/// projected orthogonally to the shifted mode. Baseline traces are the white
/// background alone. Heralded trace i draws from substream 2i of the seed,
/// baseline trace i from substream 2i + 1.
TracePair synthesize_traces(const TraceModel& model, int n_heralded, int n_baseline, std::uint64_t seed,
                            const TraceOptions& options = {});

/// Same, with the physics assembled from an experiment configuration.
TracePair synthesize_traces(const ExperimentConfig& config, int n_heralded, int n_baseline, std::uint64_t seed,
                            const TraceOptions& options = {});

struct PcaResult {
  ModeFunction mode;
  std::vector<double> eigenvalues;  ///< of C_heralded - C_baseline, descending
  double noise_floor = 0.0;         ///< expected largest eigenvalue from sampling noise alone
  bool significant = false;         ///< top eigenvalue clears the noise floor
};

PcaResult pca_extract(const TraceMatrix& heralded, const TraceMatrix& baseline, int workers = 1);

/// x_i = sum_t f(t) trace_i(t) dt.
std::vector<double> project_traces(const TraceMatrix& traces, const ModeFunction& mode);

/// [u32 n_traces][u32 n_samples][f64 sample_rate][f64 data row-major], little endian.
void write_traces_binary(const std::string& path, const TraceMatrix& traces);
TraceMatrix read_traces_binary(const std::string& path);
/// Header row of sample times in ns, then one row per trace.
void write_traces_csv(const std::string& path, const TraceMatrix& traces);

}  // namespace cvtomo
