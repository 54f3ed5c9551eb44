#include "cvtomo/fock.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cvtomo/errors.hpp"

namespace cvtomo {
namespace {

// Looser than kHermitianTol: inputs are products of several matrices and carry
// rounding noise; the stored matrix is made exactly Hermitian afterwards.
constexpr double kInputHermitianTol = 1e-10;

Matrix validated_state(const Matrix& data) {
  if (data.rows() != data.cols() || data.rows() < 1) {
    throw InvalidState("density matrix must be square and non-empty");
  }
  const double asym = (data - data.adjoint()).cwiseAbs().maxCoeff();
  if (asym > kInputHermitianTol * std::max(1.0, data.cwiseAbs().maxCoeff())) {
    std::ostringstream msg;
    msg << "density matrix is not Hermitian (max |rho - rho^dag| = " << asym << ")";
    throw InvalidState(msg.str());
  }
  Matrix herm = 0.5 * (data + data.adjoint());
  const double tr = herm.trace().real();
  if (std::abs(tr - 1.0) > kTraceTol) {
    std::ostringstream msg;
    msg << "density matrix trace " << tr << " differs from 1";
    throw InvalidState(msg.str());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(herm, Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < -kPsdTol) {
    std::ostringstream msg;
    msg << "density matrix has negative eigenvalue " << min_eig;
    throw InvalidState(msg.str());
  }
  return herm;
}

Matrix squeeze_generator(double r, double phase, int dim) {
  const Matrix a = ladder(dim).matrix();
  const Matrix a2 = a * a;
  const Complex e = std::polar(1.0, phase);
  return 0.5 * r * (std::conj(e) * a2 - e * a2.adjoint());
}

// Smallest cutoff whose discarded tail population is below kLeakageTol.
int required_dim(const RealVector& populations) {
  double tail = 0.0;
  for (int n = static_cast<int>(populations.size()) - 1; n >= 0; --n) {
    tail += populations(n);
    if (tail > kLeakageTol) return n + 1;
  }
  return 1;
}

// The truncated evolution is only trustworthy well inside its working space,
// so the estimate is refined at twice the candidate until it stops growing.
template <typename PopsAt>
int converged_required_dim(PopsAt&& pops_at, int candidate) {
  for (int round = 0; round < 8; ++round) {
    const int next = required_dim(pops_at(2 * candidate));
    if (next <= candidate) return candidate;
    candidate = next;
  }
  return candidate;
}

Matrix sqrt_psd(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.adjoint()));
  const RealVector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().adjoint();
}

}  // namespace

FockOperator::FockOperator(Matrix data) : data_(std::move(data)) {
  if (data_.rows() != data_.cols()) throw InvalidDimension("operator matrix must be square");
  dims_ = {static_cast<int>(data_.rows()), 1};
}

FockOperator::FockOperator(Matrix data, std::pair<int, int> dims)
    : data_(std::move(data)), dims_(dims) {
  if (data_.rows() != data_.cols() || data_.rows() != dims.first * dims.second) {
    throw InvalidDimension("operator matrix does not match the mode dimensions");
  }
}

FockOperator FockOperator::adjoint() const { return FockOperator(data_.adjoint(), dims_); }

FockOperator FockOperator::operator*(const FockOperator& other) const {
  if (dims_ != other.dims_) throw ShapeMismatch("operator dimensions differ");
  return FockOperator(data_ * other.data_, dims_);
}

DensityMatrix::DensityMatrix(const Matrix& data) : data_(validated_state(data)) {}

DensityMatrix DensityMatrix::normalized(const Matrix& data) {
  const double tr = data.trace().real();
  if (!(tr > 0.0) || !std::isfinite(tr)) throw InvalidState("cannot normalize: trace is not positive");
  return DensityMatrix(data / tr);
}

DensityMatrix DensityMatrix::pure(const Vector& amplitudes) {
  const double norm = amplitudes.norm();
  if (!(norm > 0.0)) throw InvalidState("zero state vector");
  const Vector psi = amplitudes / norm;
  return DensityMatrix(psi * psi.adjoint());
}

DensityMatrix DensityMatrix::fock(int n, int dim) {
  if (dim < 1 || n < 0 || n >= dim) throw InvalidDimension("Fock level outside the cutoff");
  Matrix m = Matrix::Zero(dim, dim);
  m(n, n) = 1.0;
  return DensityMatrix(m);
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  if (dim < 1) throw InvalidDimension("dimension must be positive");
  return DensityMatrix(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::thermal(double nbar, int dim) {
  if (nbar < 0.0) throw DomainError("thermal mean photon number must be >= 0");
  if (dim < 1) throw InvalidDimension("dimension must be positive");
  Matrix m = Matrix::Zero(dim, dim);
  const double ratio = nbar / (1.0 + nbar);
  double w = 1.0 / (1.0 + nbar);
  for (int n = 0; n < dim; ++n) {
    m(n, n) = w;
    w *= ratio;
  }
  return normalized(m);
}

DensityMatrix DensityMatrix::padded(int new_dim) const {
  if (new_dim < dim()) throw InvalidDimension("padding cannot shrink a state");
  Matrix m = Matrix::Zero(new_dim, new_dim);
  m.topLeftCorner(dim(), dim()) = data_;
  return DensityMatrix(m);
}

DensityMatrix DensityMatrix::truncated(int new_dim) const {
  if (new_dim < 1 || new_dim > dim()) throw InvalidDimension("truncation outside the current cutoff");
  return normalized(data_.topLeftCorner(new_dim, new_dim));
}

double DensityMatrix::population_above(int new_dim) const {
  double tail = 0.0;
  for (int n = std::max(new_dim, 0); n < dim(); ++n) tail += data_(n, n).real();
  return tail;
}

TwoModeState::TwoModeState(const Matrix& data, std::pair<int, int> dims) : dims_(dims) {
  if (data.rows() != dims.first * dims.second) throw ShapeMismatch("two-mode data does not match dims");
  data_ = validated_state(data);
}

TwoModeState TwoModeState::product(const DensityMatrix& first, const DensityMatrix& second) {
  const int d1 = first.dim();
  const int d2 = second.dim();
  Matrix m(d1 * d2, d1 * d2);
  for (int i = 0; i < d1; ++i)
    for (int k = 0; k < d1; ++k) m.block(i * d2, k * d2, d2, d2) = first(i, k) * second.matrix();
  return TwoModeState(m, {d1, d2});
}

TwoModeState TwoModeState::pure(const Vector& amplitudes, std::pair<int, int> dims) {
  const double norm = amplitudes.norm();
  if (!(norm > 0.0)) throw InvalidState("zero state vector");
  const Vector psi = amplitudes / norm;
  return TwoModeState(psi * psi.adjoint(), dims);
}

FockOperator ladder(int dim) {
  if (dim < 2) throw InvalidDimension("ladder operator needs dim >= 2");
  Matrix a = Matrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return FockOperator(a);
}

FockOperator number_operator(int dim) {
  if (dim < 1) throw InvalidDimension("dimension must be positive");
  Matrix n = Matrix::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) n(k, k) = k;
  return FockOperator(n);
}

Matrix exp_antihermitian(const Matrix& generator) {
  const Matrix h = Complex(0.0, -1.0) * generator;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (h + h.adjoint()));
  Vector phases(eig.eigenvalues().size());
  for (Eigen::Index k = 0; k < phases.size(); ++k) phases(k) = std::polar(1.0, eig.eigenvalues()(k));
  return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
}

FockOperator squeeze_unitary(double r, double phase, int dim) {
  if (dim < 2) throw InvalidDimension("squeeze unitary needs dim >= 2");
  if (r != 0.0) {
    auto vacuum_pops = [&](int work) -> RealVector {
      return exp_antihermitian(squeeze_generator(r, phase, work)).col(0).cwiseAbs2();
    };
    const RealVector pops = vacuum_pops(2 * dim);
    const double leak = pops.tail(dim).sum();
    if (leak > kLeakageTol) {
      const int need = converged_required_dim(vacuum_pops, required_dim(pops));
      std::ostringstream msg;
      msg << "squeezing r=" << r << " leaks " << leak << " beyond cutoff " << dim << "; need dim >= " << need;
      throw CutoffTooSmall(msg.str(), need);
    }
  }
  return FockOperator(exp_antihermitian(squeeze_generator(r, phase, dim)));
}

DensityMatrix squeeze_state(const DensityMatrix& rho, double r, double phase, int out_dim) {
  if (rho.dim() > out_dim) throw InvalidDimension("output cutoff smaller than the input state");
  const int work = 2 * out_dim;
  const Matrix u = exp_antihermitian(squeeze_generator(r, phase, work));
  const Matrix embedded = rho.padded(work).matrix();
  const DensityMatrix wide(u * embedded * u.adjoint());
  const double leak = wide.population_above(out_dim);
  if (leak > kLeakageTol) {
    auto pops_at = [&](int w) -> RealVector {
      const Matrix uw = exp_antihermitian(squeeze_generator(r, phase, w));
      return (uw * rho.padded(w).matrix() * uw.adjoint()).diagonal().real();
    };
    const int need = converged_required_dim(pops_at, required_dim(wide.matrix().diagonal().real()));
    std::ostringstream msg;
    msg << "squeezed state leaks " << leak << " beyond cutoff " << out_dim << "; need dim >= " << need;
    throw CutoffTooSmall(msg.str(), need);
  }
  return wide.truncated(out_dim);
}

FockOperator beamsplitter_unitary(double transmissivity, std::pair<int, int> dims) {
  if (!(transmissivity >= 0.0 && transmissivity <= 1.0)) {
    throw DomainError("beamsplitter transmissivity must lie in [0, 1]");
  }
  const auto [d1, d2] = dims;
  if (d1 < 1 || d2 < 1) throw InvalidDimension("mode dimensions must be positive");
  const double theta = std::acos(std::sqrt(transmissivity));
  const int total = d1 * d2;
  Matrix u = Matrix::Zero(total, total);
  auto index = [d2 = d2](int n1, int n2) { return n1 * d2 + n2; };

  for (int photons = 0; photons <= d1 + d2 - 2; ++photons) {
    const int lo = std::max(0, photons - (d2 - 1));
    const int hi = std::min(photons, d1 - 1);
    const int size = hi - lo + 1;
    // Block basis: n1 = lo..hi, n2 = photons - n1.
    Matrix gen = Matrix::Zero(size, size);
    for (int i = 0; i < size; ++i) {
      const int n1 = lo + i;
      const int n2 = photons - n1;
      if (i + 1 < size) {
        // <n1+1, n2-1| a^dag b |n1, n2>
        const double amp = theta * std::sqrt(static_cast<double>((n1 + 1) * n2));
        gen(i + 1, i) += amp;
        gen(i, i + 1) -= amp;
      }
    }
    const Matrix block = exp_antihermitian(gen);
    for (int i = 0; i < size; ++i)
      for (int k = 0; k < size; ++k)
        u(index(lo + i, photons - lo - i), index(lo + k, photons - lo - k)) = block(i, k);
  }
  return FockOperator(u, dims);
}

DensityMatrix partial_trace(const TwoModeState& state, int keep) {
  const auto [d1, d2] = state.dims();
  const Matrix& x = state.matrix();
  if (keep == 0) {
    Matrix out = Matrix::Zero(d1, d1);
    for (int i = 0; i < d1; ++i)
      for (int k = 0; k < d1; ++k)
        for (int j = 0; j < d2; ++j) out(i, k) += x(i * d2 + j, k * d2 + j);
    return DensityMatrix(out);
  }
  if (keep == 1) {
    Matrix out = Matrix::Zero(d2, d2);
    for (int j = 0; j < d2; ++j)
      for (int l = 0; l < d2; ++l)
        for (int i = 0; i < d1; ++i) out(j, l) += x(i * d2 + j, i * d2 + l);
    return DensityMatrix(out);
  }
  throw ShapeMismatch("mode index must be 0 or 1");
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) throw ShapeMismatch("fidelity needs equal dimensions");
  const Matrix root = sqrt_psd(rho.matrix());
  const Matrix inner = root * sigma.matrix() * root;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (inner + inner.adjoint()), Eigen::EigenvaluesOnly);
  const double tr = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(tr * tr, 0.0, 1.0);
}

StateMetrics metrics(const DensityMatrix& rho) {
  StateMetrics m{};
  m.purity = (rho.matrix() * rho.matrix()).trace().real();
  for (int n = 0; n < rho.dim(); ++n) {
    const double pop = rho(n, n).real();
    m.mean_photon += n * pop;
    m.parity += (n % 2 == 0 ? pop : -pop);
  }
  return m;
}

DensityMatrix conjugate(const FockOperator& unitary, const DensityMatrix& rho) {
  if (unitary.dim() != rho.dim()) throw ShapeMismatch("operator and state dimensions differ");
  return DensityMatrix(unitary.matrix() * rho.matrix() * unitary.matrix().adjoint());
}

}  // namespace cvtomo
