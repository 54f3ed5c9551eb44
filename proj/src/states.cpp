#include "cvtomo/states.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "cvtomo/errors.hpp"

namespace cvtomo {

SqueezeSpec SqueezeSpec::from_r(double r) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("squeezing parameter must be finite and >= 0");
  SqueezeSpec s;
  s.r_ = r;
  return s;
}

SqueezeSpec SqueezeSpec::from_pump(double pump_mw, double coupling) {
  if (!(pump_mw >= 0.0) || !std::isfinite(pump_mw)) throw DomainError("pump power must be >= 0");
  if (!(coupling > 0.0) || !std::isfinite(coupling)) throw DomainError("pump coupling must be > 0");
  SqueezeSpec s;
  s.pump_mw_ = pump_mw;
  s.coupling_ = coupling;
  return s;
}

double SqueezeSpec::r() const {
  if (r_) return *r_;
  return *coupling_ * std::sqrt(*pump_mw_);
}

DensityMatrix squeezed_vacuum(const SqueezeSpec& spec, int dim) {
  if (dim < 2) throw InvalidDimension("squeezed vacuum needs dim >= 2");
  return squeeze_state(DensityMatrix::vacuum(dim), spec.r(), 0.0, dim);
}

HeraldedState herald_subtract(const DensityMatrix& input, double tap_reflectance,
                              const FockOperator& click_povm) {
  if (!(tap_reflectance > 0.0 && tap_reflectance < 1.0)) {
    throw DomainError("tap reflectance must lie in (0, 1)");
  }
  if (click_povm.is_two_mode()) throw ShapeMismatch("click POVM must act on the idler mode only");
  const Matrix& povm = click_povm.matrix();
  {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (povm + povm.adjoint()), Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -kPsdTol || eig.eigenvalues().maxCoeff() > 1.0 + kPsdTol) {
      throw DomainError("click POVM must satisfy 0 <= Pi <= I");
    }
  }
  const int d = input.dim();
  const int di = click_povm.dim();
  const FockOperator bs = beamsplitter_unitary(1.0 - tap_reflectance, {d, di});

  // Only columns with the idler in vacuum contribute: W_k(n, m) = <n, k|B|m, 0>.
  std::vector<Matrix> w(di, Matrix(d, d));
  for (int k = 0; k < di; ++k)
    for (int n = 0; n < d; ++n)
      for (int m = 0; m < d; ++m) w[k](n, m) = bs(n * di + k, m * di);

  // Tr_idler[(I x Pi) B (rho x |0><0|) B^dag] = sum_k' (W_k' rho) (sum_k Pi_k'k W_k)^dag
  Matrix out = Matrix::Zero(d, d);
  for (int kp = 0; kp < di; ++kp) {
    Matrix z = Matrix::Zero(d, d);
    bool any = false;
    for (int k = 0; k < di; ++k) {
      if (povm(kp, k) == Complex(0.0)) continue;
      z += povm(kp, k) * w[k];
      any = true;
    }
    if (any) out += w[kp] * input.matrix() * z.adjoint();
  }
  const double p = out.trace().real();
  if (!(p >= 1e-15)) {
    std::ostringstream msg;
    msg << "herald success probability " << p << " is too small to condition on";
    throw HeraldImpossible(msg.str());
  }
  return HeraldedState{DensityMatrix(out / p), std::min(p, 1.0)};
}

DensityMatrix exact_subtract(const DensityMatrix& input) {
  if (input.dim() < 2) throw InvalidDimension("subtraction needs dim >= 2");
  const Matrix a = ladder(input.dim()).matrix();
  const Matrix out = a * input.matrix() * a.adjoint();
  const double p = out.trace().real();
  if (!(p > 1e-15)) throw HeraldImpossible("state has no photons to subtract");
  return DensityMatrix(out / p);
}

Vector coherent_amplitudes(Complex alpha, int dim) {
  if (dim < 1) throw InvalidDimension("dimension must be positive");
  const int work = 2 * dim;
  Vector c(work);
  c(0) = std::exp(-0.5 * std::norm(alpha));
  for (int n = 1; n < work; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  const double tail = c.tail(work - dim).squaredNorm();
  if (tail > 1e-8) {
    int need = work;
    double acc = 0.0;
    for (int n = work - 1; n >= 0; --n) {
      acc += std::norm(c(n));
      if (acc > 1e-8) {
        need = n + 1;
        break;
      }
    }
    std::ostringstream msg;
    msg << "coherent amplitude |alpha|=" << std::abs(alpha) << " leaks " << tail << " beyond cutoff "
        << dim;
    throw CutoffTooSmall(msg.str(), need);
  }
  return c.head(dim);
}

DensityMatrix ideal_cat(Complex alpha, int sign, int dim) {
  if (sign != 1 && sign != -1) throw DomainError("cat parity sign must be +1 or -1");
  if (dim < 2) throw InvalidDimension("cat state needs dim >= 2");
  if (alpha == Complex(0.0)) return DensityMatrix::fock(sign > 0 ? 0 : 1, dim);
  const Vector plus = coherent_amplitudes(alpha, dim);
  Vector psi(dim);
  for (int n = 0; n < dim; ++n) {
    const double parity = (n % 2 == 0) ? 1.0 : -1.0;
    psi(n) = plus(n) * (1.0 + sign * parity);
  }
  return DensityMatrix::pure(psi);
}

}  // namespace cvtomo
