#include "cvtomo/wigner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cvtomo/errors.hpp"
#include "cvtomo/parallel.hpp"

namespace cvtomo {
namespace {

constexpr double kInvPi = 1.0 / std::numbers::pi;

// Normalized Laguerre functions l_n^k(y) = sqrt(n!/(n+k)!) y^{k/2} e^{-y/2} L_n^k(y)
// for n = 0 .. count-1, by the three-term recurrence; all bounded by 1.
void laguerre_functions(int k, int count, double y, double* out) {
  if (count <= 0) return;
  double l0;
  if (y == 0.0) {
    l0 = (k == 0) ? 1.0 : 0.0;
  } else {
    l0 = std::exp(0.5 * k * std::log(y) - 0.5 * y - 0.5 * std::lgamma(k + 1.0));
  }
  out[0] = l0;
  if (count == 1) return;
  out[1] = l0 * (1.0 + k - y) / std::sqrt(k + 1.0);
  for (int n = 1; n + 1 < count; ++n) {
    const double a = (2.0 * n + 1.0 + k - y) * std::sqrt((n + 1.0) / (n + 1.0 + k));
    const double b = (n + k) * std::sqrt(n * (n + 1.0) / ((n + k) * (n + k + 1.0)));
    out[n + 1] = (a * out[n] - b * out[n - 1]) / (n + 1.0);
  }
}

// W(x, p) = (1/pi) sum_mn rho_mn <n|D P D^dag|m>; for m = n + k this element is
// (-1)^n e^{-i k phi} l_n^k(2(x^2 + p^2)) / pi with phi = arg(x + i p).
double evaluate(const Matrix& rho, double x, double p, std::vector<double>& scratch) {
  const int d = static_cast<int>(rho.rows());
  const double y = 2.0 * (x * x + p * p);
  const double phi = std::atan2(p, x);
  scratch.resize(d);
  double w = 0.0;
  for (int k = 0; k < d; ++k) {
    const int count = d - k;
    laguerre_functions(k, count, y, scratch.data());
    Complex acc = 0.0;
    for (int n = 0; n < count; ++n) {
      const double sign = (n % 2 == 0) ? 1.0 : -1.0;
      acc += sign * scratch[n] * rho(n + k, n);
    }
    if (k == 0) {
      w += acc.real();
    } else {
      w += 2.0 * (acc * std::polar(1.0, -k * phi)).real();
    }
  }
  return kInvPi * w;
}

double trapezoid_weight(const std::vector<double>& axis, std::size_t i) {
  if (axis.size() < 2) return 0.0;
  const double left = (i > 0) ? axis[i] - axis[i - 1] : 0.0;
  const double right = (i + 1 < axis.size()) ? axis[i + 1] - axis[i] : 0.0;
  return 0.5 * (left + right);
}

}  // namespace

std::vector<double> uniform_axis(double half_width, int points) {
  if (points < 2 || !(half_width > 0.0)) throw DomainError("axis needs >= 2 points and a positive width");
  std::vector<double> axis(points);
  for (int i = 0; i < points; ++i) axis[i] = -half_width + 2.0 * half_width * i / (points - 1);
  return axis;
}

std::vector<double> default_wigner_axis() { return uniform_axis(6.0, 121); }

WignerField wigner_grid(const DensityMatrix& rho, const std::vector<double>& x, const std::vector<double>& p,
                        int workers) {
  if (x.empty() || p.empty()) throw ShapeMismatch("Wigner grid axes must be non-empty");
  WignerField field{x, p, RealMatrix(x.size(), p.size()), false};
  parallel_for(x.size(), workers, [&](std::size_t i) {
    std::vector<double> scratch;
    for (std::size_t j = 0; j < p.size(); ++j) field.values(i, j) = evaluate(rho.matrix(), x[i], p[j], scratch);
  });
  const double peak = field.values.cwiseAbs().maxCoeff();
  double edge = 0.0;
  const auto nx = field.values.rows(), np = field.values.cols();
  edge = std::max({field.values.row(0).cwiseAbs().maxCoeff(), field.values.row(nx - 1).cwiseAbs().maxCoeff(),
                   field.values.col(0).cwiseAbs().maxCoeff(), field.values.col(np - 1).cwiseAbs().maxCoeff()});
  field.boundary_warning = edge > 1e-4 * peak;
  return field;
}

double wigner_value(const DensityMatrix& rho, double x, double p) {
  std::vector<double> scratch;
  return evaluate(rho.matrix(), x, p, scratch);
}

double wigner_value_parity(const DensityMatrix& rho, double x, double p, int work_dim) {
  if (work_dim < rho.dim()) throw InvalidDimension("working dimension below the state dimension");
  const Complex alpha(x / std::sqrt(2.0), p / std::sqrt(2.0));
  const Matrix a = ladder(work_dim).matrix();
  const Matrix d = exp_antihermitian(alpha * a.adjoint() - std::conj(alpha) * a);
  Matrix big = Matrix::Zero(work_dim, work_dim);
  big.topLeftCorner(rho.dim(), rho.dim()) = rho.matrix();
  const Matrix shifted = d.adjoint() * big * d;
  double w = 0.0;
  for (int n = 0; n < work_dim; ++n) w += ((n % 2 == 0) ? 1.0 : -1.0) * shifted(n, n).real();
  return kInvPi * w;
}

double wigner_origin(const DensityMatrix& rho) {
  double w = 0.0;
  for (int n = 0; n < rho.dim(); ++n) w += ((n % 2 == 0) ? 1.0 : -1.0) * rho(n, n).real();
  return kInvPi * w;
}

NegativityMetrics negativity_metrics(const WignerField& field) {
  NegativityMetrics m;
  Eigen::Index i = 0, j = 0;
  m.min_value = field.values.minCoeff(&i, &j);
  m.min_x = field.x[i];
  m.min_p = field.p[j];
  for (std::size_t a = 0; a < field.x.size(); ++a) {
    const double wx = trapezoid_weight(field.x, a);
    for (std::size_t b = 0; b < field.p.size(); ++b)
      m.negative_volume += wx * trapezoid_weight(field.p, b) * std::max(-field.values(a, b), 0.0);
  }
  return m;
}

double integrate(const WignerField& field) {
  double total = 0.0;
  for (std::size_t a = 0; a < field.x.size(); ++a) {
    const double wx = trapezoid_weight(field.x, a);
    for (std::size_t b = 0; b < field.p.size(); ++b) total += wx * trapezoid_weight(field.p, b) * field.values(a, b);
  }
  return total;
}

}  // namespace cvtomo
