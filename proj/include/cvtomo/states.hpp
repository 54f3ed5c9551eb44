#pragma once

#include <optional>

#include "cvtomo/fock.hpp"

namespace cvtomo {

/// Squeezing given directly as r, or as pump power with r = coupling * sqrt(P).
class SqueezeSpec {
 public:
  static SqueezeSpec from_r(double r);
  static SqueezeSpec from_pump(double pump_mw, double coupling);

  double r() const;
  std::optional<double> pump_mw() const { return pump_mw_; }
  std::optional<double> coupling() const { return coupling_; }

 private:
  SqueezeSpec() = default;
  std::optional<double> r_;
  std::optional<double> pump_mw_;
  std::optional<double> coupling_;
};

struct HeraldedState {
  DensityMatrix state;
  double success_probability;
};

/// S(r)|0><0|S(r)^dag, x-squeezed (Var x = e^{-2r}/2). Computed at twice the
/// cutoff and projected down.
DensityMatrix squeezed_vacuum(const SqueezeSpec& spec, int dim);

/// Conditional signal state after tapping `tap_reflectance` onto an idler mode
/// in vacuum and measuring the idler with `click_povm`. The idler dimension is
/// taken from the POVM.
HeraldedState herald_subtract(const DensityMatrix& input, double tap_reflectance,
                              const FockOperator& click_povm);

/// a rho a^dag / tr(a rho a^dag).
DensityMatrix exact_subtract(const DensityMatrix& input);

/// Normalized |alpha> + sign |-alpha> for real or complex alpha; alpha = 0
/// returns the limiting Fock state (|0> for sign +1, |1> for sign -1).
DensityMatrix ideal_cat(Complex alpha, int sign, int dim);

/// Coherent state |alpha>, computed at twice the cutoff; tail leakage above 1e-8 throws.
Vector coherent_amplitudes(Complex alpha, int dim);

}  // namespace cvtomo
