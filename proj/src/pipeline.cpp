#include "cvtomo/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "cvtomo/errors.hpp"
#include "cvtomo/temporal.hpp"
#include "cvtomo/wigner.hpp"

namespace cvtomo {
namespace {

constexpr int kMaxIdlerDim = 16;
constexpr double kReferenceTap = 0.05;

// ln sinh(x) for x > 0 without overflow.
double log_sinh(double x) {
  if (x > 20.0) return x + std::log1p(-std::exp(-2.0 * x)) - std::log(2.0);
  return std::log(std::sinh(x));
}

}  // namespace

double config_jitter_efficiency(const ExperimentConfig& config) {
  const double sigma = config.jitter_sigma_s();
  if (sigma == 0.0) return 1.0;
  const double gamma = double_exp_gamma(config.filter_fwhm_hz);
  const TimeGrid grid = TimeGrid::centered(15.0 / gamma, 1.0 / (40.0 * gamma));
  return jitter_efficiency(double_exp_mode(config.filter_fwhm_hz, 0.0, grid), sigma);
}

PreparedStates prepare_states(const ExperimentConfig& config) {
  config.validate();
  const int dim = config.cutoff;
  const DensityMatrix squeezed = squeezed_vacuum(config.squeeze(), dim);
  const FockOperator click = click_povm(config.detector_eta, config.dark_prob, std::min(dim, kMaxIdlerDim));
  const HeraldedState heralded = herald_subtract(squeezed, config.tap_reflectance, click);
  const double eta_j = config_jitter_efficiency(config);
  const DensityMatrix jittered = apply_jitter(heralded.state, squeezed, eta_j);
  const DetectionChain chain = config.physical_chain();
  return PreparedStates{squeezed,
                        heralded.state,
                        heralded.success_probability,
                        eta_j,
                        jittered,
                        apply_loss(jittered, chain.eta_pre),
                        measured_state(chain, jittered)};
}

double herald_rate(double amplitude_hz, double r, double tap_reflectance) {
  const double s = std::sinh(r);
  return amplitude_hz * s * s * (tap_reflectance / kReferenceTap);
}

SimulationResult simulate_experiment(const ExperimentConfig& config, int workers,
                                     std::optional<double> rate_amplitude_hz) {
  SimulationResult result{{}, prepare_states(config), std::nullopt};
  const auto counts = split_counts(config.n_samples, config.phases_rad.size());
  result.records = sample(result.states.measured, config.phases_rad, counts, config.seed, workers);
  if (rate_amplitude_hz)
    result.herald_rate_hz = herald_rate(*rate_amplitude_hz, config.squeeze().r(), config.tap_reflectance);
  return result;
}

MeasurementModel reconstruction_model(const ExperimentConfig& config, int dim) {
  const auto edges = default_bin_edges();
  return chain_to_measurement(config.nominal_chain(), config.phases_rad, edges, dim);
}

double RateModelFit::predict(double pump_mw) const {
  const double s = std::sinh(coupling * std::sqrt(pump_mw));
  return amplitude_hz * s * s;
}

RateModelFit fit_rates(std::span<const double> powers_mw, std::span<const double> rates_hz) {
  if (powers_mw.size() != rates_hz.size()) throw DomainError("one rate per pump power required");
  if (powers_mw.size() < 2) throw DomainError("rate fit needs at least two points");
  for (std::size_t i = 0; i < powers_mw.size(); ++i)
    if (!(powers_mw[i] > 0.0 && rates_hz[i] > 0.0) || !std::isfinite(powers_mw[i]) || !std::isfinite(rates_hz[i]))
      throw DomainError("pump powers and rates must be positive and finite");

  const std::size_t n = powers_mw.size();
  std::vector<double> root_p(n), log_rate(n);
  for (std::size_t i = 0; i < n; ++i) {
    root_p[i] = std::sqrt(powers_mw[i]);
    log_rate[i] = std::log(rates_hz[i]);
  }
  const double max_root = *std::max_element(root_p.begin(), root_p.end());
  const double c_lo = 1e-6;
  const double c_hi = 300.0 / max_root;

  // ln A that best matches the data for a given c.
  auto log_amplitude = [&](double c) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += log_rate[i] - 2.0 * log_sinh(c * root_p[i]);
    return s / static_cast<double>(n);
  };

  RateModelFit fit;
  if (n == 2) {
    if (root_p[0] == root_p[1]) throw FitError("rate fit: the two pump powers coincide");
    const std::size_t lo = root_p[0] < root_p[1] ? 0 : 1;
    const std::size_t hi = 1 - lo;
    const double target = log_rate[hi] - log_rate[lo];
    auto g = [&](double c) { return 2.0 * (log_sinh(c * root_p[hi]) - log_sinh(c * root_p[lo])) - target; };
    if (g(c_lo) > 0.0)
      throw FitError("rate fit: rates grow more slowly than linearly in pump power; no sinh^2 solution");
    if (g(c_hi) < 0.0) throw FitError("rate fit: ratio too large for the coupling search range");
    boost::uintmax_t iterations = 200;
    const auto bracket = boost::math::tools::toms748_solve(
        g, c_lo, c_hi, boost::math::tools::eps_tolerance<double>(52), iterations);
    if (iterations >= 200) throw FitError("rate fit: root find did not converge in 200 iterations");
    fit.coupling = 0.5 * (bracket.first + bracket.second);
    const double s = std::sinh(fit.coupling * root_p[lo]);
    fit.amplitude_hz = rates_hz[lo] / (s * s);
  } else {
    auto sse = [&](double u) {
      const double c = std::exp(u);
      const double la = log_amplitude(c);
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double e = la + 2.0 * log_sinh(c * root_p[i]) - log_rate[i];
        total += e * e;
      }
      return total;
    };
    // Coarse scan to pick the basin, then Brent inside it.
    const double u_lo = std::log(c_lo), u_hi = std::log(c_hi);
    constexpr int kScan = 200;
    int best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= kScan; ++k) {
      const double v = sse(u_lo + (u_hi - u_lo) * k / kScan);
      if (v < best_value) {
        best_value = v;
        best = k;
      }
    }
    const double a = u_lo + (u_hi - u_lo) * std::max(best - 1, 0) / kScan;
    const double b = u_lo + (u_hi - u_lo) * std::min(best + 1, kScan) / kScan;
    boost::uintmax_t iterations = 500;
    const auto minimum = boost::math::tools::brent_find_minima(sse, a, b, 52, iterations);
    if (iterations >= 500) throw FitError("rate fit: minimization did not converge in 500 iterations");
    fit.coupling = std::exp(minimum.first);
    fit.amplitude_hz = std::exp(log_amplitude(fit.coupling));
  }
  if (!(fit.coupling > 0.0 && fit.amplitude_hz > 0.0) || !std::isfinite(fit.amplitude_hz))
    throw FitError("rate fit produced a non-positive parameter");
  for (std::size_t i = 0; i < n; ++i) fit.residuals.push_back((fit.predict(powers_mw[i]) - rates_hz[i]) / rates_hz[i]);
  return fit;
}

std::vector<SweepRow> sweep_loss(const ExperimentConfig& base, std::span<const double> added_loss_db,
                                 const SweepOptions& options) {
  base.validate();
  if (added_loss_db.empty()) throw DomainError("loss sweep needs at least one point");
  const MeasurementModel model = reconstruction_model(base, options.recon_dim);
  MleOptions mle = options.mle;
  mle.workers = options.workers;

  auto run = [&](double loss_db, SweepRow& row) {
    ExperimentConfig cfg = base;
    cfg.added_loss_db = loss_db;
    const auto sim = simulate_experiment(cfg, options.workers);
    const MleResult fit = mle_reconstruct(sim.records, model, mle);
    row.loss_db = loss_db;
    row.w00 = wigner_origin(fit.rho);
    row.iterations = fit.iterations;
    row.converged = fit.converged;
    row.monotone = fit.monotone;
    row.w00_err = std::numeric_limits<double>::quiet_NaN();
    if (options.bootstrap_resamples > 0) {
      row.w00_err = bootstrap(sim.records, model, wigner_origin, "w00", options.bootstrap_resamples,
                              cfg.seed ^ 0xb0075742ULL, mle)
                        .std_error;
    }
    return fit.rho;
  };

  std::optional<DensityMatrix> reference;
  std::vector<SweepRow> rows(added_loss_db.size());
  std::vector<std::optional<DensityMatrix>> states(added_loss_db.size());
  for (std::size_t i = 0; i < added_loss_db.size(); ++i) {
    states[i] = run(added_loss_db[i], rows[i]);
    if (added_loss_db[i] == 0.0 && !reference) reference = states[i];
  }
  if (!reference) {
    SweepRow scratch;
    reference = run(0.0, scratch);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].fidelity = fidelity(*states[i], *reference);
  return rows;
}

}  // namespace cvtomo
