#pragma once

// Quadrature statistics in the Fock basis.
//
// The rotated quadrature x_theta = cos(theta) x + sin(theta) p has eigenstates
// with <n|x_theta> = e^{i n theta} psi_n(x), so the marginal of rho is
// p(x|theta) = sum_mn rho_mn e^{i(n-m)theta} psi_m(x) psi_n(x).

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cvtomo/fock.hpp"

namespace cvtomo {

struct QuadratureRecord {
  double phase = 0.0;  ///< LO phase, rad
  double value = 0.0;  ///< quadrature, vacuum variance 1/2
  std::optional<double> herald_time_ns;

  bool operator==(const QuadratureRecord&) const = default;
};

/// Binned, efficiency-aware homodyne POVM shared by the sampler-side model and
/// the reconstructor.
///
/// Bin j of phase theta is Pi = U(theta) B_j U(theta)^dag with
/// U = diag(e^{i n theta}) and B_j = L^dag_eta[ int_bin |x><x| dx ], a real
/// symmetric matrix independent of the phase. Bins are
/// (-inf, e_0), [e_0, e_1), ..., [e_K, +inf); no edges means one bin over R.
class MeasurementModel {
 public:
  MeasurementModel(std::vector<double> phases, std::vector<double> edges, double eta_pre,
                   double eta_eff, std::vector<RealMatrix> bin_operators);

  const std::vector<double>& phases() const { return phases_; }
  const std::vector<double>& edges() const { return edges_; }
  double eta_pre() const { return eta_pre_; }
  double eta_eff() const { return eta_eff_; }
  int dim() const { return dim_; }
  int n_bins() const { return static_cast<int>(bins_.size()); }
  int n_phases() const { return static_cast<int>(phases_.size()); }

  const RealMatrix& bin_operator(int bin) const { return bins_.at(bin); }
  /// Full POVM element for (phase index, bin).
  FockOperator povm(int phase_index, int bin) const;

  int bin_of(double x) const;
  /// Index of `phase` in the model's phase list (tolerance 1e-9 rad); throws ShapeMismatch.
  int phase_index(double phase) const;

  /// Row j holds B_j flattened column-major; used for fast probability evaluation.
  const RealMatrix& stacked_bins() const { return stacked_; }

 private:
  std::vector<double> phases_;
  std::vector<double> edges_;
  double eta_pre_;
  double eta_eff_;
  int dim_;
  std::vector<RealMatrix> bins_;
  RealMatrix stacked_;
};

/// psi_n(x) for the convention x = (a + a^dag)/sqrt(2). Uses a rescaled
/// upward recurrence, so large n and |x| do not overflow.
double quad_wavefunction(int n, double x);

/// psi_0(x) .. psi_{count-1}(x).
RealVector quad_wavefunctions(int count, double x);

/// Re(U^dag rho U) for U = diag(e^{i n theta}); p(x|theta) = psi^T M psi.
RealMatrix rotated_real_part(const DensityMatrix& rho, double theta);

double marginal(const DensityMatrix& rho, double theta, double x);

/// <x_theta^2> - <x_theta>^2.
double quadrature_variance(const DensityMatrix& rho, double theta);

/// Inverse-CDF sampler for one phase. The CDF is tabulated on an adaptively
/// refined grid until the linear-interpolation error is below 1e-7 per cell.
class QuadratureSampler {
 public:
  QuadratureSampler(const DensityMatrix& rho, double theta);

  double draw(double uniform) const;
  /// Tabulated CDF (piecewise-linear interpolation of the node values).
  double cdf(double x) const;
  /// Integral of the marginal over the tabulated range before renormalization.
  double raw_mass() const { return raw_mass_; }

 private:
  std::vector<double> nodes_;
  std::vector<double> cumulative_;
  double raw_mass_ = 0.0;
};

/// Draws counts[i] samples at phases[i]; phase i uses the substream (seed, i).
std::vector<QuadratureRecord> sample(const DensityMatrix& rho, std::span<const double> phases,
                                     std::span<const std::size_t> counts, std::uint64_t seed,
                                     int workers = 1);

std::vector<QuadratureRecord> sample(const DensityMatrix& rho, std::span<const double> phases,
                                     std::size_t n_per_phase, std::uint64_t seed, int workers = 1);

/// Splits `total` draws over `n_phases` phases, earlier phases taking the remainder.
std::vector<std::size_t> split_counts(std::size_t total, std::size_t n_phases);

MeasurementModel build_povm(std::span<const double> phases, std::span<const double> bin_edges,
                            double eta_eff, int dim, double eta_pre = 1.0);

/// 201 uniform bins on [-7, 7] (202 edges); with the two open tails, 203 bins.
std::vector<double> default_bin_edges();
/// n uniform phases in [0, pi).
std::vector<double> uniform_phases(int n);

}  // namespace cvtomo
