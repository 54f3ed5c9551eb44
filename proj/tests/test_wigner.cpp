#include <cmath>
#include <numbers>

#include "cvtomo/channels.hpp"
#include "cvtomo/states.hpp"
#include "cvtomo/wigner.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cvtomo;
using std::numbers::pi;

TEST_CASE("closed-form Wigner functions") {
  const DensityMatrix vac = DensityMatrix::vacuum(6);
  const DensityMatrix one = DensityMatrix::fock(1, 6);
  for (double x : {-1.5, 0.0, 0.3, 2.0})
    for (double p : {-0.7, 0.0, 1.1}) {
      const double r2 = x * x + p * p;
      CHECK(wigner_value(vac, x, p) == doctest::Approx(std::exp(-r2) / pi).epsilon(1e-12));
      CHECK(wigner_value(one, x, p) == doctest::Approx((2.0 * r2 - 1.0) * std::exp(-r2) / pi).epsilon(1e-12));
    }
  CHECK(wigner_value(vac, 0.0, 0.0) == doctest::Approx(0.3183).epsilon(1e-4));
  CHECK(wigner_value(one, 0.0, 0.0) == doctest::Approx(-0.3183).epsilon(1e-4));

  // Coherent state: a displaced vacuum Gaussian centred on (sqrt2 Re a, sqrt2 Im a).
  const Complex alpha(0.9, -0.4);
  const Vector c = coherent_amplitudes(alpha, 30);
  const DensityMatrix coh(c * c.adjoint());
  const double x0 = std::numbers::sqrt2 * alpha.real(), p0 = std::numbers::sqrt2 * alpha.imag();
  for (double x : {-1.0, 0.5, 1.3})
    for (double p : {-1.0, -0.5, 0.4}) {
      const double expected = std::exp(-(x - x0) * (x - x0) - (p - p0) * (p - p0)) / pi;
      CHECK(std::abs(wigner_value(coh, x, p) - expected) < 1e-9);
    }
}

TEST_CASE("Laguerre sum agrees with displaced parity") {
  for (int s = 0; s < 10; ++s) {
    const int dim = 2 + s;
    const DensityMatrix rho = testing::random_state(dim, 700 + s);
    for (double x : {-1.6, 0.0, 0.9})
      for (double p : {-0.5, 1.2}) CHECK(std::abs(wigner_value(rho, x, p) - wigner_value_parity(rho, x, p, 90)) < 1e-8);
    CHECK(wigner_origin(rho) == doctest::Approx(wigner_value(rho, 0.0, 0.0)).epsilon(1e-12));
  }
}

TEST_CASE("origin under loss") {
  const DensityMatrix one = DensityMatrix::fock(1, 4);
  double last = -1.0;
  for (int k = 0; k <= 20; ++k) {
    const double eta = 1.0 - 0.05 * k;
    const double w = wigner_origin(apply_loss(one, eta));
    CHECK(w == doctest::Approx((1.0 - 2.0 * eta) / pi).epsilon(1e-12));
    CHECK(w > last);
    last = w;
  }
  CHECK(std::abs(wigner_origin(apply_loss(one, 0.5))) < 1e-15);
}

TEST_CASE("grid normalization and layout") {
  const std::vector<double> axis = uniform_axis(7.0, 141);
  CHECK(axis.front() == -7.0);
  CHECK(axis.back() == 7.0);
  CHECK(axis[70] == doctest::Approx(0.0));
  for (int s = 0; s < 3; ++s) {
    const DensityMatrix rho = testing::random_state(8, 800 + s);
    const WignerField f = wigner_grid(rho, axis, axis);
    CHECK(integrate(f) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_FALSE(f.boundary_warning);
  }
  const std::vector<double> xs{-1.0, 0.5}, ps{0.25, 1.0, 2.0};
  const DensityMatrix rho = testing::random_state(5, 9);
  const WignerField f = wigner_grid(rho, xs, ps);
  REQUIRE(f.values.rows() == 2);
  REQUIRE(f.values.cols() == 3);
  CHECK(f.values(1, 2) == doctest::Approx(wigner_value(rho, 0.5, 2.0)));
  const WignerField threaded = wigner_grid(rho, xs, ps, 4);
  CHECK((threaded.values - f.values).cwiseAbs().maxCoeff() == 0.0);

  const DensityMatrix wide = squeezed_vacuum(SqueezeSpec::from_r(1.0), 60);
  CHECK(wigner_grid(wide, uniform_axis(2.0, 41), uniform_axis(2.0, 41)).boundary_warning);
  CHECK_FALSE(wigner_grid(DensityMatrix::vacuum(4), default_wigner_axis(), default_wigner_axis()).boundary_warning);
}

TEST_CASE("negativity of the single photon") {
  // Radial oracle: integral of max(-W, 0) = int_0^{1/sqrt2} (1 - 2r^2) e^{-r^2} 2r dr.
  const double oracle = testing::simpson(
      [](double r) { return (1.0 - 2.0 * r * r) * std::exp(-r * r) * 2.0 * r; }, 0.0, 1.0 / std::numbers::sqrt2, 2000);
  CHECK(oracle == doctest::Approx(2.0 * std::exp(-0.5) - 1.0).epsilon(1e-10));

  const std::vector<double> axis = uniform_axis(3.0, 601);
  const NegativityMetrics m = negativity_metrics(wigner_grid(DensityMatrix::fock(1, 4), axis, axis));
  CHECK(m.min_value == doctest::Approx(-1.0 / pi).epsilon(1e-12));
  CHECK(m.min_x == doctest::Approx(0.0));
  CHECK(m.min_p == doctest::Approx(0.0));
  CHECK(m.negative_volume == doctest::Approx(oracle).epsilon(1e-3));

  const NegativityMetrics v = negativity_metrics(wigner_grid(DensityMatrix::vacuum(4), axis, axis));
  CHECK(v.negative_volume == 0.0);
  CHECK(v.min_value > 0.0);
}
