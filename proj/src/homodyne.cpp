#include "cvtomo/homodyne.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

#include "cvtomo/channels.hpp"
#include "cvtomo/errors.hpp"
#include "cvtomo/parallel.hpp"
#include "cvtomo/random.hpp"

namespace cvtomo {
namespace {

using Gauss8 = boost::math::quadrature::gauss<double, 8>;

// Calls f(x, w) for the 8-point Gauss-Legendre rule on [a, b].
template <typename F>
void gauss_nodes(double a, double b, F&& f) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const auto& abscissa = Gauss8::abscissa();
  const auto& weights = Gauss8::weights();
  for (std::size_t i = 0; i < abscissa.size(); ++i) {
    if (abscissa[i] == 0.0) {
      f(mid, half * weights[i]);
    } else {
      f(mid - half * abscissa[i], half * weights[i]);
      f(mid + half * abscissa[i], half * weights[i]);
    }
  }
}

double support_radius(int dim) { return std::sqrt(2.0 * dim + 1.0) + 9.0; }

double density(const RealMatrix& rotated, double x) {
  const RealVector psi = quad_wavefunctions(static_cast<int>(rotated.rows()), x);
  return std::max(psi.dot(rotated * psi), 0.0);
}

}  // namespace

MeasurementModel::MeasurementModel(std::vector<double> phases, std::vector<double> edges, double eta_pre,
                                   double eta_eff, std::vector<RealMatrix> bin_operators)
    : phases_(std::move(phases)),
      edges_(std::move(edges)),
      eta_pre_(eta_pre),
      eta_eff_(eta_eff),
      bins_(std::move(bin_operators)) {
  if (bins_.empty()) throw ShapeMismatch("measurement model needs at least one bin");
  if (bins_.size() != edges_.size() + 1) throw ShapeMismatch("bin operators do not match the edges");
  dim_ = static_cast<int>(bins_.front().rows());
  stacked_.resize(static_cast<Eigen::Index>(bins_.size()), static_cast<Eigen::Index>(dim_) * dim_);
  for (std::size_t j = 0; j < bins_.size(); ++j) {
    if (bins_[j].rows() != dim_ || bins_[j].cols() != dim_) throw ShapeMismatch("bin operator dimension");
    stacked_.row(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const RealVector>(bins_[j].data(), bins_[j].size()).transpose();
  }
}

FockOperator MeasurementModel::povm(int phase_index, int bin) const {
  const double theta = phases_.at(phase_index);
  const RealMatrix& b = bins_.at(bin);
  Matrix out(dim_, dim_);
  for (int m = 0; m < dim_; ++m)
    for (int n = 0; n < dim_; ++n) out(m, n) = b(m, n) * std::polar(1.0, (m - n) * theta);
  return FockOperator(out);
}

int MeasurementModel::bin_of(double x) const {
  return static_cast<int>(std::upper_bound(edges_.begin(), edges_.end(), x) - edges_.begin());
}

int MeasurementModel::phase_index(double phase) const {
  for (std::size_t i = 0; i < phases_.size(); ++i)
    if (std::abs(phases_[i] - phase) <= 1e-9) return static_cast<int>(i);
  throw ShapeMismatch("record phase " + std::to_string(phase) + " is not in the measurement model");
}

RealVector quad_wavefunctions(int count, double x) {
  RealVector psi = RealVector::Zero(std::max(count, 0));
  if (count <= 0) return psi;
  const double x2 = x * x;
  if (x2 < 1200.0) {
    psi(0) = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x2);
    if (count > 1) psi(1) = std::numbers::sqrt2 * x * psi(0);
    for (int n = 1; n + 1 < count; ++n) {
      psi(n + 1) = std::sqrt(2.0 / (n + 1)) * x * psi(n) - std::sqrt(static_cast<double>(n) / (n + 1)) * psi(n - 1);
    }
    return psi;
  }
  // Far tails: carry the recurrence with a separate log scale.
  double log_scale = -0.5 * x2 - 0.25 * std::log(std::numbers::pi);
  double prev = 0.0;
  double cur = 1.0;
  auto emit = [&](int n, double value) {
    psi(n) = value == 0.0 ? 0.0 : std::copysign(std::exp(std::log(std::abs(value)) + log_scale), value);
  };
  emit(0, cur);
  for (int n = 0; n + 1 < count; ++n) {
    const double next = std::sqrt(2.0 / (n + 1)) * x * cur - std::sqrt(static_cast<double>(n) / (n + 1)) * prev;
    prev = cur;
    cur = next;
    if (std::abs(cur) > 1e200) {
      cur *= 1e-200;
      prev *= 1e-200;
      log_scale += 200.0 * std::log(10.0);
    }
    emit(n + 1, cur);
  }
  return psi;
}

double quad_wavefunction(int n, double x) {
  if (n < 0) throw DomainError("photon number must be >= 0");
  return quad_wavefunctions(n + 1, x)(n);
}

RealMatrix rotated_real_part(const DensityMatrix& rho, double theta) {
  const int d = rho.dim();
  RealMatrix out(d, d);
  for (int m = 0; m < d; ++m)
    for (int n = 0; n < d; ++n) out(m, n) = (rho(m, n) * std::polar(1.0, (n - m) * theta)).real();
  return out;
}

double marginal(const DensityMatrix& rho, double theta, double x) {
  const RealMatrix rotated = rotated_real_part(rho, theta);
  const RealVector psi = quad_wavefunctions(rho.dim(), x);
  return psi.dot(rotated * psi);
}

double quadrature_variance(const DensityMatrix& rho, double theta) {
  const int d = rho.dim() + 1;
  const Matrix a = ladder(d).matrix();
  const Matrix xq = (a * std::polar(1.0, -theta) + a.adjoint() * std::polar(1.0, theta)) / std::numbers::sqrt2;
  const Matrix r = rho.padded(d).matrix();
  const double mean = (r * xq).trace().real();
  const double second = (r * xq * xq).trace().real();
  return second - mean * mean;
}

QuadratureSampler::QuadratureSampler(const DensityMatrix& rho, double theta) {
  const RealMatrix rotated = rotated_real_part(rho, theta);
  const double radius = support_radius(rho.dim());
  constexpr double kInitialStep = 0.05;
  constexpr double kCellTol = 1e-7;
  constexpr double kMinWidth = 1e-6;

  auto integrate = [&](double a, double b) {
    double sum = 0.0;
    gauss_nodes(a, b, [&](double x, double w) { sum += w * density(rotated, x); });
    return sum;
  };

  nodes_.push_back(-radius);
  cumulative_.push_back(0.0);
  const int cells = static_cast<int>(std::ceil(2.0 * radius / kInitialStep));
  struct Cell {
    double a, b, mass;
  };
  std::vector<Cell> stack;
  for (int c = 0; c < cells; ++c) {
    const double a = -radius + 2.0 * radius * c / cells;
    const double b = -radius + 2.0 * radius * (c + 1) / cells;
    stack.push_back({a, b, integrate(a, b)});
    while (!stack.empty()) {
      const Cell cell = stack.back();
      stack.pop_back();
      const double m = 0.5 * (cell.a + cell.b);
      const double left = integrate(cell.a, m);
      const double right = integrate(m, cell.b);
      if (std::abs(left - 0.5 * cell.mass) > kCellTol && cell.b - cell.a > kMinWidth) {
        // Right half goes first so the left half is processed next.
        stack.push_back({m, cell.b, right});
        stack.push_back({cell.a, m, left});
        continue;
      }
      nodes_.push_back(m);
      cumulative_.push_back(cumulative_.back() + left);
      nodes_.push_back(cell.b);
      cumulative_.push_back(cumulative_.back() + right);
    }
  }
  raw_mass_ = cumulative_.back();
  if (!(raw_mass_ > 0.0)) throw InvalidState("marginal has no mass on the sampling grid");
  for (double& c : cumulative_) c /= raw_mass_;
}

double QuadratureSampler::draw(double u) const {
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.begin()) return nodes_.front();
  if (it == cumulative_.end()) return nodes_.back();
  const std::size_t hi = static_cast<std::size_t>(it - cumulative_.begin());
  const std::size_t lo = hi - 1;
  const double span = cumulative_[hi] - cumulative_[lo];
  const double t = span > 0.0 ? (u - cumulative_[lo]) / span : 0.5;
  return nodes_[lo] + t * (nodes_[hi] - nodes_[lo]);
}

double QuadratureSampler::cdf(double x) const {
  if (x <= nodes_.front()) return 0.0;
  if (x >= nodes_.back()) return 1.0;
  const std::size_t hi = static_cast<std::size_t>(std::upper_bound(nodes_.begin(), nodes_.end(), x) - nodes_.begin());
  const std::size_t lo = hi - 1;
  const double t = (x - nodes_[lo]) / (nodes_[hi] - nodes_[lo]);
  return cumulative_[lo] + t * (cumulative_[hi] - cumulative_[lo]);
}

std::vector<std::size_t> split_counts(std::size_t total, std::size_t n_phases) {
  if (n_phases == 0) throw DomainError("need at least one phase");
  std::vector<std::size_t> counts(n_phases, total / n_phases);
  for (std::size_t i = 0; i < total % n_phases; ++i) ++counts[i];
  return counts;
}

std::vector<QuadratureRecord> sample(const DensityMatrix& rho, std::span<const double> phases,
                                     std::span<const std::size_t> counts, std::uint64_t seed, int workers) {
  if (phases.size() != counts.size()) throw ShapeMismatch("one count per phase required");
  std::vector<std::vector<QuadratureRecord>> per_phase(phases.size());
  const RandomStream root(seed);
  parallel_for(phases.size(), workers, [&](std::size_t i) {
    const QuadratureSampler sampler(rho, phases[i]);
    RandomStream stream = root.substream(i);
    auto& out = per_phase[i];
    out.reserve(counts[i]);
    for (std::size_t k = 0; k < counts[i]; ++k) out.push_back({phases[i], sampler.draw(stream.uniform()), {}});
  });
  std::vector<QuadratureRecord> records;
  for (auto& block : per_phase) records.insert(records.end(), block.begin(), block.end());
  return records;
}

std::vector<QuadratureRecord> sample(const DensityMatrix& rho, std::span<const double> phases,
                                     std::size_t n_per_phase, std::uint64_t seed, int workers) {
  if (n_per_phase < 1) throw DomainError("need at least one sample per phase");
  const std::vector<std::size_t> counts(phases.size(), n_per_phase);
  return sample(rho, phases, counts, seed, workers);
}

MeasurementModel build_povm(std::span<const double> phases, std::span<const double> bin_edges, double eta_eff,
                            int dim, double eta_pre) {
  if (dim < 1) throw InvalidDimension("POVM dimension must be positive");
  if (!(eta_eff > 0.0 && eta_eff <= 1.0)) throw DomainError("effective efficiency must lie in (0, 1]");
  if (!(eta_pre > 0.0 && eta_pre <= 1.0)) throw DomainError("pre-amplifier efficiency must lie in (0, 1]");
  for (double p : phases)
    if (!std::isfinite(p)) throw DomainError("phases must be finite");
  for (std::size_t i = 0; i < bin_edges.size(); ++i) {
    if (!std::isfinite(bin_edges[i])) throw DomainError("bin edges must be finite");
    if (i > 0 && !(bin_edges[i] > bin_edges[i - 1])) throw DomainError("bin edges must be strictly increasing");
  }

  double reach = support_radius(dim) + 3.0;
  for (double e : bin_edges) reach = std::max(reach, std::abs(e) + 1.0);
  std::vector<double> bounds;
  bounds.push_back(-reach);
  bounds.insert(bounds.end(), bin_edges.begin(), bin_edges.end());
  bounds.push_back(reach);

  constexpr double kMaxSegment = 0.25;
  std::vector<RealMatrix> bins;
  bins.reserve(bounds.size() - 1);
  for (std::size_t j = 0; j + 1 < bounds.size(); ++j) {
    RealMatrix acc = RealMatrix::Zero(dim, dim);
    const double lo = bounds[j];
    const double hi = bounds[j + 1];
    const int segments = std::max(1, static_cast<int>(std::ceil((hi - lo) / kMaxSegment)));
    for (int s = 0; s < segments; ++s) {
      const double a = lo + (hi - lo) * s / segments;
      const double b = lo + (hi - lo) * (s + 1) / segments;
      gauss_nodes(a, b, [&](double x, double w) {
        const RealVector psi = quad_wavefunctions(dim, x);
        acc.noalias() += w * psi * psi.transpose();
      });
    }
    bins.push_back(loss_adjoint(RealMatrix(0.5 * (acc + acc.transpose())), eta_eff));
  }
  return MeasurementModel(std::vector<double>(phases.begin(), phases.end()),
                          std::vector<double>(bin_edges.begin(), bin_edges.end()), eta_pre, eta_eff,
                          std::move(bins));
}

std::vector<double> default_bin_edges() {
  std::vector<double> edges(202);
  for (int i = 0; i < 202; ++i) edges[i] = -7.0 + 14.0 * i / 201.0;
  return edges;
}

std::vector<double> uniform_phases(int n) {
  if (n < 1) throw DomainError("need at least one phase");
  std::vector<double> phases(n);
  for (int i = 0; i < n; ++i) phases[i] = std::numbers::pi * i / n;
  return phases;
}

}  // namespace cvtomo
