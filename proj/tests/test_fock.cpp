#include <cmath>
#include <numbers>

#include "cvtomo/errors.hpp"
#include "cvtomo/fock.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cvtomo;
using testing::max_abs_diff;
using testing::random_state;

namespace {

// Closed-form squeezed vacuum amplitudes for exp[(r/2)(a^2 - a^dag^2)].
Vector squeezed_vacuum_closed_form(double r, int dim) {
  Vector c = Vector::Zero(dim);
  for (int n = 0; 2 * n < dim; ++n) {
    const double log_mag = 0.5 * std::lgamma(2.0 * n + 1.0) - n * std::log(2.0) - std::lgamma(n + 1.0);
    c(2 * n) = std::pow(-std::tanh(r), n) * std::exp(log_mag) / std::sqrt(std::cosh(r));
  }
  return c;
}

double x_variance(const Matrix& rho) {
  const int d = static_cast<int>(rho.rows());
  const Matrix a = ladder(d).matrix();
  const Matrix x = (a + a.adjoint()) / std::numbers::sqrt2;
  const double mean = (rho * x).trace().real();
  return (rho * x * x).trace().real() - mean * mean;
}

}  // namespace

TEST_CASE("ladder operator entries and commutator") {
  const Matrix a = ladder(6).matrix();
  CHECK(a(0, 1).real() == doctest::Approx(1.0));
  CHECK(a(1, 2).real() == doctest::Approx(std::sqrt(2.0)));
  CHECK(a(2, 1) == Complex(0.0));
  const Matrix comm = a * a.adjoint() - a.adjoint() * a;
  CHECK(max_abs_diff(comm.topLeftCorner(5, 5), Matrix::Identity(5, 5)) < 1e-14);
  CHECK_THROWS_AS(ladder(1), InvalidDimension);
}

TEST_CASE("squeeze unitary") {
  SUBCASE("r = 0 is the identity") {
    CHECK(max_abs_diff(squeeze_unitary(0.0, 0.0, 10).matrix(), Matrix::Identity(10, 10)) < 1e-14);
  }
  SUBCASE("vacuum column matches closed form and Var x = e^-1/2 at r = 0.5") {
    const int d = 40;
    const Vector psi = squeeze_unitary(0.5, 0.0, d).matrix().col(0);
    // The truncated generator is exact only up to the leakage tolerance.
    CHECK((psi - squeezed_vacuum_closed_form(0.5, d)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(x_variance(psi * psi.adjoint()) == doctest::Approx(std::exp(-1.0) / 2.0).epsilon(1e-9));
    CHECK(x_variance(psi * psi.adjoint()) == doctest::Approx(0.18394).epsilon(1e-4));
  }
  SUBCASE("S(r) S(-r) = I") {
    for (double r : {0.3, 0.7, 1.0}) {
      const int d = 60;
      const Matrix prod = squeeze_unitary(r, 0.4, d).matrix() * squeeze_unitary(-r, 0.4, d).matrix();
      CHECK(max_abs_diff(prod, Matrix::Identity(d, d)) < 1e-8);
    }
  }
  SUBCASE("too small a cutoff names a sufficient one") {
    try {
      squeeze_unitary(1.5, 0.0, 12);
      FAIL("expected CutoffTooSmall");
    } catch (const CutoffTooSmall& e) {
      CHECK(e.required_dim() > 12);
      CHECK_NOTHROW(squeeze_unitary(1.5, 0.0, e.required_dim()));
    }
  }
  SUBCASE("squeeze_state of vacuum equals the closed form") {
    const DensityMatrix s = squeeze_state(DensityMatrix::vacuum(1), 0.4, 0.0, 30);
    const Vector c = squeezed_vacuum_closed_form(0.4, 30);
    CHECK(max_abs_diff(s.matrix(), c * c.adjoint()) < 1e-10);
  }
}

TEST_CASE("beamsplitter unitary") {
  SUBCASE("T = 1 is the identity") {
    CHECK(max_abs_diff(beamsplitter_unitary(1.0, {4, 3}).matrix(), Matrix::Identity(12, 12)) < 1e-14);
  }
  SUBCASE("single photon on T = 0.5 and T = 0.9") {
    const int d2 = 3;
    auto index = [&](int n1, int n2) { return n1 * d2 + n2; };
    Vector in = Vector::Zero(3 * d2);
    in(index(1, 0)) = 1.0;
    const Vector half = beamsplitter_unitary(0.5, {3, d2}).matrix() * in;
    CHECK(std::norm(half(index(1, 0))) == doctest::Approx(0.5));
    CHECK(std::norm(half(index(0, 1))) == doctest::Approx(0.5));
    CHECK(std::abs(half(index(1, 0))) == doctest::Approx(1.0 / std::sqrt(2.0)));
    const Vector tenth = beamsplitter_unitary(0.9, {3, d2}).matrix() * in;
    CHECK(std::norm(tenth(index(0, 1))) == doctest::Approx(0.1).epsilon(1e-12));
  }
  SUBCASE("unitary and photon-number conserving") {
    const Matrix u = beamsplitter_unitary(0.37, {6, 5}).matrix();
    CHECK(max_abs_diff(u * u.adjoint(), Matrix::Identity(30, 30)) < 1e-12);
    const TwoModeState in = TwoModeState::product(random_state(3, 5).padded(6), random_state(2, 6).padded(5));
    const TwoModeState out(u * in.matrix() * u.adjoint(), {6, 5});
    auto total_photons = [](const TwoModeState& s) {
      const StateMetrics m0 = metrics(partial_trace(s, 0));
      const StateMetrics m1 = metrics(partial_trace(s, 1));
      return m0.mean_photon + m1.mean_photon;
    };
    CHECK(total_photons(out) == doctest::Approx(total_photons(in)).epsilon(1e-10));
    CHECK(std::abs(out.trace() - 1.0) < 1e-10);
  }
  CHECK_THROWS_AS(beamsplitter_unitary(1.2, {2, 2}), DomainError);
}

TEST_CASE("partial trace") {
  const DensityMatrix rho = random_state(3, 11);
  const DensityMatrix sigma = random_state(4, 12);
  const TwoModeState prod = TwoModeState::product(rho, sigma);
  CHECK(max_abs_diff(partial_trace(prod, 1).matrix(), sigma.matrix()) < 1e-14);
  CHECK(max_abs_diff(partial_trace(prod, 0).matrix(), rho.matrix()) < 1e-14);

  Vector bell = Vector::Zero(4);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  const DensityMatrix reduced = partial_trace(TwoModeState::pure(bell, {2, 2}), 0);
  CHECK(max_abs_diff(reduced.matrix(), 0.5 * Matrix::Identity(2, 2)) < 1e-14);

  const DensityMatrix big = random_state(12, 13);
  const TwoModeState generic(big.matrix(), {3, 4});
  CHECK(partial_trace(generic, 0).trace() == doctest::Approx(generic.trace()).epsilon(1e-12));
  CHECK_THROWS_AS(partial_trace(generic, 2), ShapeMismatch);
}

TEST_CASE("fidelity") {
  const DensityMatrix rho = random_state(6, 21);
  const DensityMatrix sigma = random_state(6, 22);
  CHECK(fidelity(rho, rho) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fidelity(DensityMatrix::fock(0, 4), DensityMatrix::fock(1, 4)) == doctest::Approx(0.0));
  CHECK(std::abs(fidelity(rho, sigma) - fidelity(sigma, rho)) < 1e-9);
  // Thermal nbar = 0.5 has vacuum weight 1/(1 + nbar); truncation is negligible at dim 60.
  CHECK(fidelity(DensityMatrix::vacuum(60), DensityMatrix::thermal(0.5, 60)) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  const DensityMatrix p1 = random_state(5, 31, 1);
  const DensityMatrix p2 = random_state(5, 32, 1);
  Eigen::SelfAdjointEigenSolver<Matrix> e1(p1.matrix()), e2(p2.matrix());
  const Vector v1 = e1.eigenvectors().col(4), v2 = e2.eigenvectors().col(4);
  CHECK(fidelity(p1, p2) == doctest::Approx(std::norm(v1.dot(v2))).epsilon(1e-9));
}

TEST_CASE("metrics") {
  const StateMetrics vac = metrics(DensityMatrix::vacuum(5));
  CHECK(vac.purity == doctest::Approx(1.0));
  CHECK(vac.mean_photon == doctest::Approx(0.0));
  CHECK(vac.parity == doctest::Approx(1.0));
  CHECK(metrics(DensityMatrix::fock(1, 5)).parity == doctest::Approx(-1.0));
  // Geometric series of squared thermal weights: 1/(2 nbar + 1).
  CHECK(metrics(DensityMatrix::thermal(1.0, 80)).purity == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("density matrix validation") {
  Matrix bad = Matrix::Identity(3, 3);
  CHECK_THROWS_AS(DensityMatrix{bad}, InvalidState);
  Matrix neg = Matrix::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  CHECK_THROWS_AS(DensityMatrix{neg}, InvalidState);
  Matrix nonherm = 0.5 * Matrix::Identity(2, 2);
  nonherm(0, 1) = 0.1;
  CHECK_THROWS_AS(DensityMatrix{nonherm}, InvalidState);
  const DensityMatrix rho = random_state(7, 41);
  CHECK(max_abs_diff(rho.matrix(), rho.matrix().adjoint()) == 0.0);
  CHECK(std::abs(rho.trace() - 1.0) < 1e-10);
}

TEST_CASE("unitary conjugation preserves trace and Hermiticity") {
  const DensityMatrix rho = random_state(20, 51).padded(40);
  const DensityMatrix out = conjugate(squeeze_unitary(0.3, 1.1, 40), rho);
  CHECK(std::abs(out.trace() - 1.0) < 1e-10);
  CHECK(max_abs_diff(out.matrix(), out.matrix().adjoint()) <= 1e-12);
}
