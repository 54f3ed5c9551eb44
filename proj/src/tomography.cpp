#include "cvtomo/tomography.hpp"

#include <cmath>

#include "cvtomo/errors.hpp"
#include "cvtomo/parallel.hpp"
#include "cvtomo/random.hpp"

namespace cvtomo {
namespace {

void check_dims(const DensityMatrix& rho, const MeasurementModel& model) {
  if (rho.dim() != model.dim()) throw ShapeMismatch("state and measurement model dimensions differ");
}

void check_data(const BinnedData& data, const MeasurementModel& model) {
  if (data.counts.rows() != model.n_phases() || data.counts.cols() != model.n_bins())
    throw ShapeMismatch("binned data does not match the measurement model");
}

RealVector phase_probabilities(const Matrix& rho, const MeasurementModel& model, int k) {
  const int d = model.dim();
  const double theta = model.phases()[k];
  RealMatrix rotated(d, d);
  for (int m = 0; m < d; ++m)
    for (int n = 0; n < d; ++n) rotated(m, n) = (rho(m, n) * std::polar(1.0, (n - m) * theta)).real();
  return model.stacked_bins() * Eigen::Map<const RealVector>(rotated.data(), rotated.size());
}

}  // namespace

BinnedData BinnedData::from_records(std::span<const QuadratureRecord> records, const MeasurementModel& model) {
  BinnedData data{RealMatrix::Zero(model.n_phases(), model.n_bins()), 0.0};
  for (const auto& r : records) {
    data.counts(model.phase_index(r.phase), model.bin_of(r.value)) += 1.0;
  }
  data.total = static_cast<double>(records.size());
  return data;
}

RealMatrix cell_probabilities(const DensityMatrix& rho, const MeasurementModel& model, int workers) {
  check_dims(rho, model);
  RealMatrix p(model.n_phases(), model.n_bins());
  parallel_for(model.n_phases(), workers, [&](std::size_t k) {
    p.row(static_cast<Eigen::Index>(k)) = phase_probabilities(rho.matrix(), model, static_cast<int>(k)).transpose();
  });
  return p;
}

double loglikelihood(const DensityMatrix& rho, const BinnedData& data, const MeasurementModel& model) {
  check_data(data, model);
  const RealMatrix p = cell_probabilities(rho, model);
  double total = 0.0;
  for (Eigen::Index k = 0; k < p.rows(); ++k)
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      if (data.counts(k, j) > 0.0) total += data.counts(k, j) * std::log(std::max(p(k, j), kProbabilityFloor));
  return total;
}

double loglikelihood(const DensityMatrix& rho, std::span<const QuadratureRecord> records,
                     const MeasurementModel& model) {
  return loglikelihood(rho, BinnedData::from_records(records, model), model);
}

MleResult mle_reconstruct(const BinnedData& data, const MeasurementModel& model, const MleOptions& options) {
  check_data(data, model);
  if (!(data.total > 0.0) || !(data.counts.sum() > 0.0)) throw NoData("no records to reconstruct from");
  if (options.max_iter < 0) throw DomainError("max_iter must be >= 0");
  const int d = model.dim();
  const int n_phases = model.n_phases();
  const double total = data.counts.sum();
  const RealMatrix freq = data.counts / total;

  MleResult result{DensityMatrix::maximally_mixed(d), 0, 0.0, false, {}, false, true};
  Matrix rho = result.rho.matrix();
  RealMatrix p(n_phases, model.n_bins());
  std::vector<Matrix> partial(n_phases);

  for (int iter = 0;; ++iter) {
    parallel_for(n_phases, options.workers, [&](std::size_t k) {
      p.row(static_cast<Eigen::Index>(k)) = phase_probabilities(rho, model, static_cast<int>(k)).transpose();
    });
    double loglik = 0.0;
    for (int k = 0; k < n_phases; ++k)
      for (int j = 0; j < model.n_bins(); ++j) {
        if (data.counts(k, j) <= 0.0) continue;
        if (p(k, j) < kProbabilityFloor) result.floor_engaged = true;
        loglik += data.counts(k, j) * std::log(std::max(p(k, j), kProbabilityFloor));
      }
    if (!result.loglik_trace.empty()) {
      const double previous = result.loglik_trace.back();
      if (loglik < previous - 1e-12 * std::max(1.0, std::abs(previous))) result.monotone = false;
      result.loglik_trace.push_back(loglik);
      if (loglik - previous < options.tol * total) {
        result.converged = true;
        break;
      }
    } else {
      result.loglik_trace.push_back(loglik);
    }
    if (iter >= options.max_iter) break;

    // R = sum_k U_k (sum_j f_kj / p_kj B_j) U_k^dag.
    parallel_for(n_phases, options.workers, [&](std::size_t k) {
      RealVector w = RealVector::Zero(model.n_bins());
      for (int j = 0; j < model.n_bins(); ++j)
        if (freq(k, j) > 0.0) w(j) = freq(k, j) / std::max(p(k, j), kProbabilityFloor);
      const RealVector flat = model.stacked_bins().transpose() * w;
      const double theta = model.phases()[k];
      Matrix rk(d, d);
      for (int m = 0; m < d; ++m)
        for (int n = 0; n < d; ++n) rk(m, n) = flat(m + n * d) * std::polar(1.0, (m - n) * theta);
      partial[k] = std::move(rk);
    });
    Matrix r = Matrix::Zero(d, d);
    for (const auto& rk : partial) r += rk;
    Matrix next = r * rho * r;
    next = 0.5 * (next + next.adjoint()).eval();
    rho = next / next.trace().real();
    ++result.iterations;
  }
  result.rho = DensityMatrix::normalized(rho);
  result.final_loglik = result.loglik_trace.back();
  return result;
}

MleResult mle_reconstruct(std::span<const QuadratureRecord> records, const MeasurementModel& model,
                          const MleOptions& options) {
  if (records.empty()) throw NoData("no records to reconstruct from");
  return mle_reconstruct(BinnedData::from_records(records, model), model, options);
}

BootstrapSummary bootstrap(std::span<const QuadratureRecord> records, const MeasurementModel& model,
                           const Statistic& statistic, const std::string& name, int n_resamples,
                           std::uint64_t seed, const MleOptions& options) {
  if (n_resamples < 50) throw DomainError("bootstrap needs at least 50 resamples");
  if (records.empty()) throw NoData("no records to resample");

  // Bin index of every record, grouped by phase.
  std::vector<std::vector<int>> cells(model.n_phases());
  for (const auto& r : records) cells[model.phase_index(r.phase)].push_back(model.bin_of(r.value));

  BootstrapSummary summary;
  summary.statistic = name;
  summary.n_resamples = n_resamples;
  MleOptions inner = options;
  inner.workers = 1;
  summary.point_estimate = statistic(mle_reconstruct(records, model, options).rho);

  std::vector<double> values(n_resamples, 0.0);
  std::vector<char> ok(n_resamples, 0);
  const RandomStream root(seed);
  parallel_for(n_resamples, options.workers, [&](std::size_t b) {
    RandomStream stream = root.substream(b);
    BinnedData data{RealMatrix::Zero(model.n_phases(), model.n_bins()), static_cast<double>(records.size())};
    for (int k = 0; k < model.n_phases(); ++k) {
      const auto& pool = cells[k];
      for (std::size_t i = 0; i < pool.size(); ++i) data.counts(k, pool[stream.below(pool.size())]) += 1.0;
    }
    try {
      values[b] = statistic(mle_reconstruct(data, model, inner).rho);
      ok[b] = std::isfinite(values[b]) ? 1 : 0;
    } catch (const Error&) {
      ok[b] = 0;
    }
  });

  for (int b = 0; b < n_resamples; ++b) {
    if (ok[b]) {
      summary.values.push_back(values[b]);
    } else {
      ++summary.n_failed;
    }
  }
  if (summary.n_failed * 10 > n_resamples)
    throw Error("bootstrap: " + std::to_string(summary.n_failed) + " of " + std::to_string(n_resamples) +
                " resamples failed");
  const double n = static_cast<double>(summary.values.size());
  double mean = 0.0;
  for (double v : summary.values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : summary.values) ss += (v - mean) * (v - mean);
  summary.std_error = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return summary;
}

}  // namespace cvtomo
