#pragma once

// Truncated Fock-space linear algebra for one and two bosonic modes.
//
// Conventions: hbar = 1, x = (a + a^dag)/sqrt(2), [x, p] = i, so the vacuum
// quadrature variance is 1/2. Two-mode basis index |n1, n2> -> n1 * dim2 + n2.

#include <complex>
#include <utility>

#include <Eigen/Dense>

namespace cvtomo {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPsdTol = 1e-9;
inline constexpr double kLeakageTol = 1e-6;

/// Linear operator on a truncated Fock space (single- or two-mode).
class FockOperator {
 public:
  FockOperator() = default;
  explicit FockOperator(Matrix data);
  FockOperator(Matrix data, std::pair<int, int> dims);

  int dim() const { return static_cast<int>(data_.rows()); }
  /// Per-mode dimensions; {dim, 1} for single-mode operators.
  std::pair<int, int> dims() const { return dims_; }
  bool is_two_mode() const { return dims_.second > 1; }

  const Matrix& matrix() const { return data_; }
  Complex operator()(int row, int col) const { return data_(row, col); }

  FockOperator adjoint() const;
  FockOperator operator*(const FockOperator& other) const;

 private:
  Matrix data_;
  std::pair<int, int> dims_{0, 1};
};

/// Single-mode state: Hermitian, unit trace, positive semidefinite.
///
/// Construction validates all three invariants (throws InvalidState) and
/// stores the exactly Hermitian part, so max|rho - rho^dag| is zero.
class DensityMatrix {
 public:
  explicit DensityMatrix(const Matrix& data);

  /// Divides by the trace first; throws InvalidState on a non-positive trace.
  static DensityMatrix normalized(const Matrix& data);
  static DensityMatrix pure(const Vector& amplitudes);
  static DensityMatrix fock(int n, int dim);
  static DensityMatrix vacuum(int dim) { return fock(0, dim); }
  static DensityMatrix maximally_mixed(int dim);
  /// Thermal state with mean photon number nbar, renormalized after truncation.
  static DensityMatrix thermal(double nbar, int dim);

  int dim() const { return static_cast<int>(data_.rows()); }
  const Matrix& matrix() const { return data_; }
  Complex operator()(int row, int col) const { return data_(row, col); }
  double trace() const { return data_.trace().real(); }

  /// Zero-padded embedding into a larger space.
  DensityMatrix padded(int new_dim) const;
  /// Projection onto the first new_dim levels, renormalized.
  DensityMatrix truncated(int new_dim) const;
  /// Population on levels >= new_dim.
  double population_above(int new_dim) const;

 private:
  Matrix data_;
};

/// Two-mode state on dims (N+1, M+1); same invariants as DensityMatrix.
class TwoModeState {
 public:
  TwoModeState(const Matrix& data, std::pair<int, int> dims);

  static TwoModeState product(const DensityMatrix& first, const DensityMatrix& second);
  static TwoModeState pure(const Vector& amplitudes, std::pair<int, int> dims);

  std::pair<int, int> dims() const { return dims_; }
  const Matrix& matrix() const { return data_; }
  double trace() const { return data_.trace().real(); }

 private:
  Matrix data_;
  std::pair<int, int> dims_;
};

struct StateMetrics {
  double purity;
  double mean_photon;
  double parity;
};

/// Annihilation operator with <n-1|a|n> = sqrt(n).
FockOperator ladder(int dim);
FockOperator number_operator(int dim);

/// exp[(r/2)(e^{-i phase} a^2 - e^{i phase} a^dag^2)] built from the truncated
/// generator at `dim`. Leakage of S|0> is measured at twice the cutoff and must
/// stay below kLeakageTol, else CutoffTooSmall names a sufficient dimension.
FockOperator squeeze_unitary(double r, double phase, int dim);

/// Squeeze an arbitrary state: embed at 2*out_dim, apply the unitary there, and
/// project back to out_dim. Throws CutoffTooSmall if the discarded population
/// exceeds kLeakageTol.
DensityMatrix squeeze_state(const DensityMatrix& rho, double r, double phase, int out_dim);

/// exp[theta (a^dag b - a b^dag)] with cos^2(theta) = transmissivity,
/// assembled block by block in total photon number.
FockOperator beamsplitter_unitary(double transmissivity, std::pair<int, int> dims);

/// Reduced state of mode `keep` (0 = first, 1 = second).
DensityMatrix partial_trace(const TwoModeState& state, int keep);

/// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

StateMetrics metrics(const DensityMatrix& rho);

/// Unitary conjugation U rho U^dag (result re-validated).
DensityMatrix conjugate(const FockOperator& unitary, const DensityMatrix& rho);

/// exp(K) for anti-Hermitian K via the spectral decomposition of -iK.
Matrix exp_antihermitian(const Matrix& generator);

}  // namespace cvtomo
