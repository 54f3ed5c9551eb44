#include <cmath>
#include <numbers>

#include "cvtomo/channels.hpp"
#include "cvtomo/errors.hpp"
#include "cvtomo/states.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cvtomo;
using testing::max_abs_diff;

namespace {

double x_variance(const DensityMatrix& rho) {
  const Matrix a = ladder(rho.dim()).matrix();
  const Matrix x = (a + a.adjoint()) / std::numbers::sqrt2;
  const double mean = (rho.matrix() * x).trace().real();
  return (rho.matrix() * x * x).trace().real() - mean * mean;
}

FockOperator ideal_click(int dim) {
  Matrix pi = Matrix::Identity(dim, dim);
  pi(0, 0) = 0.0;
  return FockOperator(pi);
}

// Brute force: full two-mode unitary, projector on the idler, partial trace.
HeraldedState brute_force_herald(const DensityMatrix& in, double reflectance, const FockOperator& click) {
  const int ds = in.dim(), di = click.dim();
  const TwoModeState joint = TwoModeState::product(in, DensityMatrix::vacuum(di));
  const Matrix u = beamsplitter_unitary(1.0 - reflectance, {ds, di}).matrix();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(click.matrix());
  const Matrix root =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * eig.eigenvectors().adjoint();
  Matrix proj = Matrix::Zero(ds * di, ds * di);
  for (int s = 0; s < ds; ++s)
    for (int a = 0; a < di; ++a)
      for (int b = 0; b < di; ++b) proj(s * di + a, s * di + b) = root(a, b);
  const Matrix out = proj * u * joint.matrix() * u.adjoint() * proj;
  const Matrix sym = 0.5 * (out + out.adjoint());
  const double p = sym.trace().real();
  return HeraldedState{partial_trace(TwoModeState(sym / p, {ds, di}), 0), p};
}

}  // namespace

TEST_CASE("squeezed vacuum") {
  CHECK(max_abs_diff(squeezed_vacuum(SqueezeSpec::from_r(0.0), 10).matrix(), DensityMatrix::vacuum(10).matrix()) <
        1e-14);
  const DensityMatrix sv = squeezed_vacuum(SqueezeSpec::from_r(0.8), 40);
  for (int k = 1; k < 40; k += 2) CHECK(std::abs(sv(k, k)) < 1e-14);
  const double r3db = 0.15 * std::log(10.0);
  CHECK(x_variance(squeezed_vacuum(SqueezeSpec::from_r(r3db), 40)) == doctest::Approx(0.5 * std::pow(10.0, -0.3)));
  CHECK(x_variance(squeezed_vacuum(SqueezeSpec::from_r(r3db), 40)) == doctest::Approx(0.2506).epsilon(1e-3));
  CHECK(SqueezeSpec::from_pump(4.0, 0.2).r() == doctest::Approx(0.4));
  CHECK_THROWS_AS(SqueezeSpec::from_r(-0.1), DomainError);
}

TEST_CASE("herald_subtract basic cases") {
  CHECK_THROWS_AS(herald_subtract(DensityMatrix::vacuum(6), 0.1, ideal_click(4)), HeraldImpossible);
  const HeraldedState one = herald_subtract(DensityMatrix::fock(1, 4), 0.5, ideal_click(4));
  CHECK(one.success_probability == doctest::Approx(0.5));
  CHECK(max_abs_diff(one.state.matrix(), DensityMatrix::vacuum(4).matrix()) < 1e-12);
  CHECK_THROWS_AS(herald_subtract(DensityMatrix::fock(1, 4), 0.0, ideal_click(4)), DomainError);
  CHECK_THROWS_AS(herald_subtract(DensityMatrix::fock(1, 4), 1.0, ideal_click(4)), DomainError);
  Matrix too_big = 2.0 * Matrix::Identity(3, 3);
  CHECK_THROWS_AS(herald_subtract(DensityMatrix::fock(1, 4), 0.5, FockOperator(too_big)), DomainError);
}

TEST_CASE("herald_subtract agrees with the brute-force two-mode construction") {
  const DensityMatrix in = testing::random_state(7, 99);
  for (const auto& click : {ideal_click(5), click_povm(0.6, 0.01, 5)}) {
    const HeraldedState fast = herald_subtract(in, 0.2, click);
    const HeraldedState slow = brute_force_herald(in, 0.2, click);
    CHECK(fast.success_probability == doctest::Approx(slow.success_probability).epsilon(1e-12));
    CHECK(max_abs_diff(fast.state.matrix(), slow.state.matrix()) < 1e-12);
  }
}

TEST_CASE("small-tap limit approaches exact subtraction") {
  const DensityMatrix sv = squeezed_vacuum(SqueezeSpec::from_r(0.3), 30);
  const HeraldedState h = herald_subtract(sv, 0.001, ideal_click(10));
  CHECK(fidelity(h.state, exact_subtract(sv)) >= 0.995);
  // A finite tap also loses signal photons, so fidelity drops as R grows.
  CHECK(fidelity(herald_subtract(sv, 0.05, ideal_click(10)).state, exact_subtract(sv)) < fidelity(h.state, exact_subtract(sv)));
}

TEST_CASE("even-level contamination is bounded by 2R") {
  for (double r : {0.3, 0.6, 0.9}) {
    const DensityMatrix sv = squeezed_vacuum(SqueezeSpec::from_r(r), 40);
    for (double R : {0.01, 0.03, 0.05}) {
      const HeraldedState h = herald_subtract(sv, R, ideal_click(12));
      double even = 0.0;
      for (int n = 0; n < 40; n += 2) even += h.state(n, n).real();
      CHECK(even <= 2.0 * R);
    }
  }
}

TEST_CASE("success probability is monotone in R and r") {
  const std::vector<double> taps{0.01, 0.05, 0.1, 0.15, 0.2};
  const std::vector<double> squeezing{0.1, 0.4, 0.7, 1.0};
  for (double r : squeezing) {
    const DensityMatrix sv = squeezed_vacuum(SqueezeSpec::from_r(r), 50);
    double last = 0.0;
    for (double R : taps) {
      const double p = herald_subtract(sv, R, click_povm(0.8, 0.0, 12)).success_probability;
      CHECK(p >= last);
      last = p;
    }
  }
  for (double R : taps) {
    double last = 0.0;
    for (double r : squeezing) {
      const double p =
          herald_subtract(squeezed_vacuum(SqueezeSpec::from_r(r), 50), R, click_povm(0.8, 0.0, 12)).success_probability;
      CHECK(p >= last);
      last = p;
    }
  }
}

TEST_CASE("click = identity means no conditioning") {
  const DensityMatrix in = testing::random_state(6, 7);
  const HeraldedState h = herald_subtract(in, 0.3, FockOperator(Matrix::Identity(6, 6)));
  CHECK(h.success_probability == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(max_abs_diff(h.state.matrix(), apply_loss(in, 0.7).matrix()) < 1e-12);
}

TEST_CASE("exact subtraction") {
  CHECK(max_abs_diff(exact_subtract(DensityMatrix::fock(1, 4)).matrix(), DensityMatrix::vacuum(4).matrix()) < 1e-14);
  CHECK(max_abs_diff(exact_subtract(DensityMatrix::fock(2, 4)).matrix(), DensityMatrix::fock(1, 4).matrix()) < 1e-14);
  const DensityMatrix odd = exact_subtract(squeezed_vacuum(SqueezeSpec::from_r(0.5), 30));
  for (int n = 0; n < 30; n += 2) CHECK(std::abs(odd(n, n)) < 1e-14);
  CHECK_THROWS_AS(exact_subtract(DensityMatrix::vacuum(4)), HeraldImpossible);
}

TEST_CASE("cat states") {
  CHECK(max_abs_diff(ideal_cat(0.0, -1, 6).matrix(), DensityMatrix::fock(1, 6).matrix()) < 1e-14);
  CHECK(max_abs_diff(ideal_cat(0.0, +1, 6).matrix(), DensityMatrix::vacuum(6).matrix()) < 1e-14);
  CHECK(max_abs_diff(ideal_cat(1e-4, -1, 6).matrix(), DensityMatrix::fock(1, 6).matrix()) < 1e-6);
  CHECK(metrics(ideal_cat(1.0, -1, 20)).parity == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(metrics(ideal_cat(Complex(0.6, 0.8), +1, 25)).parity == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(ideal_cat(4.0, 1, 10), CutoffTooSmall);
}

TEST_CASE("coherent amplitudes are Poissonian") {
  const Vector c = coherent_amplitudes(1.5, 30);
  for (int n = 0; n < 10; ++n) {
    const double poisson = std::exp(-2.25 + n * std::log(2.25) - std::lgamma(n + 1.0));
    CHECK(std::norm(c(n)) == doctest::Approx(poisson).epsilon(1e-12));
  }
}
