#pragma once

// Wigner functions in the convention where the vacuum peaks at 1/pi
// (hbar = 1, alpha = (x + i p)/sqrt(2)).

#include <vector>

#include "cvtomo/fock.hpp"

namespace cvtomo {

/// values(i, j) = W(x[i], p[j]).
struct WignerField {
  std::vector<double> x;
  std::vector<double> p;
  RealMatrix values;
  /// Set when the boundary carries |W| > 1e-4 max|W|, i.e. the grid clips the state.
  bool boundary_warning = false;
};

struct NegativityMetrics {
  double min_value = 0.0;
  double min_x = 0.0;
  double min_p = 0.0;
  double negative_volume = 0.0;  ///< trapezoid integral of max(-W, 0)
};

/// `points` uniform nodes on [-half_width, half_width].
std::vector<double> uniform_axis(double half_width, int points);
/// +-6 with 121 nodes.
std::vector<double> default_wigner_axis();

/// Sum over Fock matrix elements using associated-Laguerre functions.
WignerField wigner_grid(const DensityMatrix& rho, const std::vector<double>& x, const std::vector<double>& p,
                        int workers = 1);
double wigner_value(const DensityMatrix& rho, double x, double p);

/// (1/pi) sum_n (-1)^n <n| D^dag rho D |n>, with D built by exponentiating the
/// truncated displacement generator at `work_dim` (>= rho.dim()).
double wigner_value_parity(const DensityMatrix& rho, double x, double p, int work_dim);

/// (1/pi) sum_n (-1)^n rho_nn.
double wigner_origin(const DensityMatrix& rho);

NegativityMetrics negativity_metrics(const WignerField& field);

/// Trapezoid integral of W over the grid.
double integrate(const WignerField& field);

}  // namespace cvtomo
