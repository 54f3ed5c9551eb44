#include "cvtomo/channels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cvtomo/errors.hpp"

namespace cvtomo {
namespace {

void check_efficiency(double eta, const char* what) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError(std::string(what) + " must lie in [0, 1]");
}

RealMatrix loss_coefficients(double eta, int dim) {
  RealMatrix c = RealMatrix::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) {
    for (int k = 0; k <= n; ++k) {
      const int kept = n - k;
      if ((eta == 0.0 && kept > 0) || (eta == 1.0 && k > 0)) continue;
      double log_w = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(kept + 1.0);
      if (kept > 0) log_w += kept * std::log(eta);
      if (k > 0) log_w += k * std::log1p(-eta);
      c(k, n) = std::exp(0.5 * log_w);
    }
  }
  return c;
}

// sum_k A_k X A_k^dag: out(m, n) = sum_k c_k(m+k) c_k(n+k) X(m+k, n+k).
template <typename M>
M loss_forward(const M& x, const RealMatrix& c) {
  const int d = static_cast<int>(x.rows());
  M out = M::Zero(d, d);
  for (int m = 0; m < d; ++m)
    for (int n = 0; n < d; ++n)
      for (int k = 0; m + k < d && n + k < d; ++k) out(m, n) += c(k, m + k) * c(k, n + k) * x(m + k, n + k);
  return out;
}

// sum_k A_k^dag X A_k: out(m, n) = sum_k c_k(m) c_k(n) X(m-k, n-k).
template <typename M>
M loss_backward(const M& x, const RealMatrix& c) {
  const int d = static_cast<int>(x.rows());
  M out = M::Zero(d, d);
  for (int m = 0; m < d; ++m)
    for (int n = 0; n < d; ++n)
      for (int k = 0; k <= std::min(m, n); ++k) out(m, n) += c(k, m) * c(k, n) * x(m - k, n - k);
  return out;
}

}  // namespace

LossChannel::LossChannel(double eta, int dim) : eta_(eta) {
  check_efficiency(eta, "loss efficiency");
  if (dim < 1) throw InvalidDimension("loss channel needs dim >= 1");
  coeff_ = loss_coefficients(eta, dim);
}

FockOperator LossChannel::kraus_operator(int k) const {
  const int d = dim();
  if (k < 0 || k >= d) throw DomainError("Kraus index out of range");
  Matrix a = Matrix::Zero(d, d);
  for (int n = k; n < d; ++n) a(n - k, n) = coeff_(k, n);
  return FockOperator(a);
}

std::vector<FockOperator> LossChannel::kraus() const {
  std::vector<FockOperator> ops;
  if (eta_ == 1.0) {
    ops.push_back(kraus_operator(0));
    return ops;
  }
  ops.reserve(dim());
  for (int k = 0; k < dim(); ++k) ops.push_back(kraus_operator(k));
  return ops;
}

LossChannel loss_kraus(double eta, int dim) { return LossChannel(eta, dim); }

DensityMatrix apply_loss(const DensityMatrix& rho, const LossChannel& channel) {
  if (rho.dim() != channel.dim()) throw ShapeMismatch("loss channel and state dimensions differ");
  RealMatrix c(channel.dim(), channel.dim());
  for (int k = 0; k < channel.dim(); ++k)
    for (int n = 0; n < channel.dim(); ++n) c(k, n) = channel.coefficient(k, n);
  return DensityMatrix(loss_forward(rho.matrix(), c));
}

DensityMatrix apply_loss(const DensityMatrix& rho, double eta) { return apply_loss(rho, LossChannel(eta, rho.dim())); }

Matrix loss_adjoint(const Matrix& x, double eta) {
  check_efficiency(eta, "loss efficiency");
  return loss_backward(x, loss_coefficients(eta, static_cast<int>(x.rows())));
}

RealMatrix loss_adjoint(const RealMatrix& x, double eta) {
  check_efficiency(eta, "loss efficiency");
  return loss_backward(x, loss_coefficients(eta, static_cast<int>(x.rows())));
}

FockOperator click_povm(double eta_det, double dark_prob, int dim) {
  check_efficiency(eta_det, "detector efficiency");
  if (!(dark_prob >= 0.0 && dark_prob < 1.0)) throw DomainError("dark-count probability must lie in [0, 1)");
  if (dim < 1) throw InvalidDimension("POVM dimension must be positive");
  Matrix pi = Matrix::Zero(dim, dim);
  double no_click = 1.0 - dark_prob;
  for (int n = 0; n < dim; ++n) {
    pi(n, n) = 1.0 - no_click;
    no_click *= (1.0 - eta_det);
  }
  return FockOperator(pi);
}

double PsaModel::gain() const { return std::pow(10.0, gain_db / 10.0); }

double psa_effective_efficiency(double eta_post, double gain_db) {
  check_efficiency(eta_post, "post-amplifier efficiency");
  if (!(gain_db >= 0.0) || !std::isfinite(gain_db)) throw DomainError("PSA gain must be >= 0 dB");
  const double g = PsaModel{gain_db}.gain();
  return eta_post * g / (eta_post * g + 1.0 - eta_post);
}

double db_to_efficiency(double loss_db) {
  if (!(loss_db >= 0.0) || !std::isfinite(loss_db)) throw DomainError("loss must be >= 0 dB");
  return std::pow(10.0, -loss_db / 10.0);
}

MeasurementModel chain_to_measurement(const DetectionChain& chain, std::span<const double> phases,
                                      std::span<const double> bin_edges, int dim) {
  const double eta_eff = psa_effective_efficiency(chain.eta_post, chain.psa.gain_db);
  return build_povm(phases, bin_edges, eta_eff, dim, chain.eta_pre);
}

DensityMatrix measured_state(const DetectionChain& chain, const DensityMatrix& rho) {
  const double eta_eff = psa_effective_efficiency(chain.eta_post, chain.psa.gain_db);
  return apply_loss(apply_loss(rho, chain.eta_pre), eta_eff);
}

double jitter_efficiency(const ModeFunction& mode, double sigma_jitter) {
  if (!(sigma_jitter >= 0.0) || !std::isfinite(sigma_jitter)) throw DomainError("jitter width must be >= 0");
  const auto& f = mode.values();
  const double dt = mode.grid().step;
  const int n = static_cast<int>(f.size());
  double norm = 0.0;
  for (double v : f) norm += v * v * dt;
  if (std::abs(norm - 1.0) > 1e-8) throw InvalidMode("mode function is not unit-normalized");
  if (sigma_jitter == 0.0) return 1.0;

  // kappa at integer lags; kappa(-tau) = kappa(tau) for a real mode.
  const int max_lag = std::min(n - 1, static_cast<int>(std::ceil(8.0 * sigma_jitter / dt)) + 2);
  std::vector<double> kappa(max_lag + 1, 0.0);
  for (int k = 0; k <= max_lag; ++k) {
    double s = 0.0;
    for (int i = k; i < n; ++i) s += f[i] * f[i - k];
    kappa[k] = s * dt;
  }
  // Cubic Lagrange interpolation between lags.
  auto kappa_at = [&](double tau) {
    const double u = std::abs(tau) / dt;
    const int i = static_cast<int>(std::floor(u));
    if (i >= max_lag) return 0.0;
    const double t = u - i;
    auto at = [&](int k) { return (k < 0) ? kappa[-k] : (k > max_lag ? 0.0 : kappa[k]); };
    const double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
    return p1 + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)));
  };

  const double reach = std::min(8.0 * sigma_jitter, max_lag * dt);
  const double step = std::min(16.0 * sigma_jitter / 4000.0, dt / 4.0);
  const int half = std::max(1, static_cast<int>(std::ceil(reach / step)));
  const double h = reach / half;
  const double norm_const = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma_jitter);
  double eta = 0.0;
  for (int j = -half; j <= half; ++j) {
    const double tau = j * h;
    const double w = (j == -half || j == half) ? 0.5 : 1.0;
    const double k = kappa_at(tau);
    eta += w * h * norm_const * std::exp(-0.5 * tau * tau / (sigma_jitter * sigma_jitter)) * k * k;
  }
  return std::clamp(eta, 0.0, 1.0);
}

DensityMatrix apply_jitter(const DensityMatrix& heralded, const DensityMatrix& baseline, double eta_j) {
  if (heralded.dim() != baseline.dim()) throw ShapeMismatch("heralded and baseline dimensions differ");
  check_efficiency(eta_j, "jitter efficiency");
  return DensityMatrix(eta_j * heralded.matrix() + (1.0 - eta_j) * baseline.matrix());
}

}  // namespace cvtomo
