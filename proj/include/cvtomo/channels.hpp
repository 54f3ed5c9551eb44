#pragma once

// Decoherence and amplification along the detection chain: optical loss,
// on/off click detection, phase-sensitive amplification and herald timing
// jitter.

#include <span>
#include <vector>

#include "cvtomo/fock.hpp"
#include "cvtomo/homodyne.hpp"
#include "cvtomo/temporal.hpp"

namespace cvtomo {

/// Pure-loss channel with Kraus operators <n-k|A_k|n> = sqrt(C(n,k) eta^{n-k} (1-eta)^k).
///
/// Each A_k is a single shifted diagonal, so only the coefficients are stored;
/// kraus() materializes the dense operators on request.
class LossChannel {
 public:
  LossChannel(double eta, int dim);

  double eta() const { return eta_; }
  int dim() const { return static_cast<int>(coeff_.rows()); }
  /// <n-k|A_k|n>, zero for n < k.
  double coefficient(int k, int n) const { return coeff_(k, n); }
  FockOperator kraus_operator(int k) const;
  std::vector<FockOperator> kraus() const;

 private:
  double eta_;
  RealMatrix coeff_;  // (k, n)
};

LossChannel loss_kraus(double eta, int dim);

DensityMatrix apply_loss(const DensityMatrix& rho, const LossChannel& channel);
DensityMatrix apply_loss(const DensityMatrix& rho, double eta);

/// Heisenberg-picture loss sum_k A_k^dag X A_k.
Matrix loss_adjoint(const Matrix& x, double eta);
RealMatrix loss_adjoint(const RealMatrix& x, double eta);

/// Click element of an on/off detector: I - (1 - dark) sum_n (1 - eta)^n |n><n|.
FockOperator click_povm(double eta_det, double dark_prob, int dim);

struct PsaModel {
  double gain_db = 20.0;
  double gain() const;
};

struct DetectionChain {
  double eta_pre = 1.0;  ///< before the PSA
  PsaModel psa;
  double eta_post = 1.0;  ///< after the PSA, homodyne and added loss included
};

/// eta G / (eta G + 1 - eta): the loss that, after rescaling the quadrature to
/// unit vacuum variance, is indistinguishable from [PSA gain G, then loss eta].
double psa_effective_efficiency(double eta_post, double gain_db);

/// Loss in dB to transmission efficiency.
double db_to_efficiency(double loss_db);

/// Binned POVM for the chain: the state first suffers eta_pre (not inverted by
/// the POVM), then is homodyned with the PSA-effective efficiency.
MeasurementModel chain_to_measurement(const DetectionChain& chain, std::span<const double> phases,
                                      std::span<const double> bin_edges, int dim);

/// State whose ideal marginals the chain records: L_eff(L_pre(rho)).
DensityMatrix measured_state(const DetectionChain& chain, const DensityMatrix& rho);

/// Mode overlap averaged over Gaussian herald jitter:
/// integral p(tau; sigma) kappa(tau)^2 dtau with kappa(tau) = integral f(t) f(t - tau) dt.
double jitter_efficiency(const ModeFunction& mode, double sigma_jitter);

/// eta_j rho_heralded + (1 - eta_j) rho_baseline.
DensityMatrix apply_jitter(const DensityMatrix& heralded, const DensityMatrix& baseline, double eta_j);

}  // namespace cvtomo
