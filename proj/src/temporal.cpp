#include "cvtomo/temporal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include <boost/math/tools/roots.hpp>
#include <fftw3.h>

#include "cvtomo/channels.hpp"
#include "cvtomo/config.hpp"
#include "cvtomo/errors.hpp"
#include "cvtomo/homodyne.hpp"
#include "cvtomo/parallel.hpp"
#include "cvtomo/pipeline.hpp"
#include "cvtomo/random.hpp"

namespace cvtomo {
namespace {

constexpr double kNormTol = 1e-8;
constexpr int kMinSamplesPerDecay = 20;
constexpr double kMinSpanDecays = 10.0;

double discrete_norm(const std::vector<double>& v, double dt) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s * dt;
}

void check_grid(const TimeGrid& grid) {
  if (grid.size < 2 || !(grid.step > 0.0) || !std::isfinite(grid.start))
    throw InvalidMode("time grid needs >= 2 points and a positive step");
}

void check_span(const TimeGrid& grid, double gamma) {
  if (grid.span() * gamma < kMinSpanDecays * (1.0 - 1e-9))
    throw InvalidMode("time grid spans fewer than 10 decay times of the mode");
}

}  // namespace

TimeGrid TimeGrid::centered(double half_width, double step) {
  if (!(half_width > 0.0 && step > 0.0)) throw DomainError("grid width and step must be positive");
  const int half = static_cast<int>(std::llround(half_width / step));
  return TimeGrid{-half * step, step, 2 * half + 1};
}

ModeFunction::ModeFunction(TimeGrid grid, std::vector<double> values, std::optional<double> gamma)
    : grid_(grid), values_(std::move(values)), gamma_(gamma) {
  check_grid(grid_);
  if (static_cast<int>(values_.size()) != grid_.size) throw ShapeMismatch("mode values do not match the grid");
  for (double v : values_)
    if (!std::isfinite(v)) throw InvalidMode("mode values must be finite");
  if (std::abs(discrete_norm(values_, grid_.step) - 1.0) > kNormTol) throw InvalidMode("mode is not unit-normalized");
  if (gamma_) check_span(grid_, *gamma_);
}

ModeFunction ModeFunction::normalized(TimeGrid grid, std::vector<double> values, std::optional<double> gamma) {
  check_grid(grid);
  const double norm = discrete_norm(values, grid.step);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw InvalidMode("mode has zero or non-finite norm");
  const double scale = 1.0 / std::sqrt(norm);
  for (double& v : values) v *= scale;
  return ModeFunction(grid, std::move(values), gamma);
}

double ModeFunction::overlap(const ModeFunction& other) const {
  if (other.grid_.size != grid_.size || std::abs(other.grid_.step - grid_.step) > 1e-9 * grid_.step ||
      std::abs(other.grid_.start - grid_.start) > 1e-6 * grid_.step)
    throw ShapeMismatch("modes live on different grids");
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) s += values_[i] * other.values_[i];
  return s * grid_.step;
}

double DoubleExpShape::operator()(double t) const { return std::sqrt(gamma) * std::exp(-gamma * std::abs(t - t0)); }

double DoubleExpShape::autocorrelation(double tau) const {
  const double g = gamma * std::abs(tau);
  return std::exp(-g) * (1.0 + g);
}

double double_exp_gamma(double fwhm_hz) {
  if (!(fwhm_hz > 0.0) || !std::isfinite(fwhm_hz)) throw DomainError("bandwidth must be positive");
  // Half-maximum frequency of (1 + w^2)^-2 for unit gamma; the spectrum scales with gamma.
  auto g = [](double w) { return std::pow(1.0 + w * w, -2.0) - 0.5; };
  boost::uintmax_t iterations = 100;
  const auto root =
      boost::math::tools::toms748_solve(g, 0.0, 2.0, boost::math::tools::eps_tolerance<double>(52), iterations);
  const double w_half = 0.5 * (root.first + root.second);
  return std::numbers::pi * fwhm_hz / w_half;
}

ModeFunction double_exp_mode(double fwhm_hz, double t0, const TimeGrid& grid) {
  check_grid(grid);
  const double gamma = double_exp_gamma(fwhm_hz);
  if (1.0 / (gamma * grid.step) < kMinSamplesPerDecay * (1.0 - 1e-9))
    throw ResolutionError("grid resolves 1/gamma with fewer than 20 samples");
  return sample_shape(DoubleExpShape{gamma, t0}, grid);
}

ModeFunction sample_shape(const DoubleExpShape& shape, const TimeGrid& grid) {
  check_grid(grid);
  std::vector<double> values(grid.size);
  for (int i = 0; i < grid.size; ++i) values[i] = shape(grid.time(i));
  return ModeFunction::normalized(grid, std::move(values), shape.gamma);
}

Spectrum spectrum(const ModeFunction& mode, int oversample) {
  if (oversample < 1) throw DomainError("oversample must be >= 1");
  const auto& f = mode.values();
  const double dt = mode.grid().step;
  const int n = static_cast<int>(f.size()) * oversample;

  std::vector<double> in(n, 0.0);
  std::copy(f.begin(), f.end(), in.begin());
  const int n_out = n / 2 + 1;
  fftw_complex* out = fftw_alloc_complex(n_out);
  fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.data(), out, FFTW_ESTIMATE);
  fftw_execute(plan);
  std::vector<double> half(n_out);
  for (int k = 0; k < n_out; ++k) half[k] = dt * dt * (out[k][0] * out[k][0] + out[k][1] * out[k][1]);
  fftw_destroy_plan(plan);
  fftw_free(out);

  Spectrum s;
  s.bin_width_hz = 1.0 / (n * dt);
  // Full two-sided spectrum in ascending frequency; |F(-v)| = |F(v)| for a real mode.
  const int lowest = -((n - 1) / 2);
  for (int k = lowest; k <= n / 2; ++k) {
    s.freq_hz.push_back(k * s.bin_width_hz);
    s.density.push_back(half[std::abs(k)]);
  }
  const double peak = *std::max_element(s.density.begin(), s.density.end());
  const std::size_t peak_index = static_cast<std::size_t>(
      std::max_element(s.density.begin(), s.density.end()) - s.density.begin());
  s.power.reserve(s.density.size());
  for (double d : s.density) s.power.push_back(d / peak);

  auto crossing = [&](int direction) {
    std::size_t i = peak_index;
    while (true) {
      const std::size_t next = i + direction;
      if (next >= s.power.size()) return s.freq_hz[i];
      if (s.power[next] <= 0.5) {
        const double t = (s.power[i] - 0.5) / (s.power[i] - s.power[next]);
        return s.freq_hz[i] + t * (s.freq_hz[next] - s.freq_hz[i]);
      }
      i = next;
    }
  };
  s.fwhm_hz = crossing(+1) - crossing(-1);
  return s;
}

TimeGrid TraceMatrix::grid() const {
  if (!(sample_rate > 0.0)) throw DomainError("trace matrix has no sample rate");
  const double step = 1.0 / sample_rate;
  return TimeGrid{-herald_index * step, step, n_samples()};
}

TracePair synthesize_traces(const TraceModel& model, int n_heralded, int n_baseline, std::uint64_t seed,
                            const TraceOptions& options) {
  if (n_heralded < 0 || n_baseline < 0) throw DomainError("trace counts must be >= 0");
  if (model.phases.empty()) throw DomainError("trace synthesis needs at least one phase");
  if (model.signal.dim() != model.background.dim()) throw ShapeMismatch("signal and background dimensions differ");
  if (!(options.sample_rate > 0.0)) throw DomainError("sample rate must be positive");
  const double sigma = options.jitter_sigma.value_or(model.jitter_sigma);
  if (!(sigma >= 0.0)) throw DomainError("jitter must be >= 0");

  const TimeGrid grid = TimeGrid::centered(options.half_window, 1.0 / options.sample_rate);
  const double dt = grid.step;
  const int herald = grid.size / 2;
  const std::size_t k_phases = model.phases.size();

  std::vector<double> noise_sd(k_phases, 0.0);
  if (options.background)
    for (std::size_t k = 0; k < k_phases; ++k)
      noise_sd[k] = std::sqrt(std::max(quadrature_variance(model.background, model.phases[k]), 0.0) / dt);

  std::vector<std::optional<QuadratureSampler>> samplers(k_phases);
  if (!options.fixed_quadrature && n_heralded > 0) {
    parallel_for(k_phases, options.workers,
                 [&](std::size_t k) { samplers[k].emplace(model.signal, model.phases[k]); });
  }

  TracePair out;
  auto init = [&](TraceMatrix& m, int rows) {
    m.data.resize(rows, grid.size);
    m.sample_rate = options.sample_rate;
    m.herald_index = herald;
    m.phases = model.phases;
  };
  init(out.heralded, n_heralded);
  init(out.baseline, n_baseline);
  out.quadratures.assign(n_heralded, 0.0);
  out.jitters.assign(n_heralded, 0.0);

  const RandomStream root(seed);
  // Heralded trace i uses substream 2i, baseline trace i substream 2i + 1.
  parallel_for(static_cast<std::size_t>(n_heralded), options.workers, [&](std::size_t i) {
    RandomStream stream = root.substream(2 * i);
    const std::size_t k = i % k_phases;
    const double q = options.fixed_quadrature ? *options.fixed_quadrature : samplers[k]->draw(stream.uniform());
    const double tau = sigma > 0.0 ? sigma * stream.normal() : 0.0;
    const ModeFunction shifted = sample_shape(DoubleExpShape{model.shape.gamma, model.shape.t0 + tau}, grid);
    const auto& f = shifted.values();
    auto row = out.heralded.data.row(static_cast<Eigen::Index>(i));
    if (noise_sd[k] > 0.0) {
      double proj = 0.0;
      for (int t = 0; t < grid.size; ++t) {
        row(t) = noise_sd[k] * stream.normal();
        proj += f[t] * row(t);
      }
      proj *= dt;
      for (int t = 0; t < grid.size; ++t) row(t) += (q - proj) * f[t];
    } else {
      for (int t = 0; t < grid.size; ++t) row(t) = q * f[t];
    }
    out.quadratures[i] = q;
    out.jitters[i] = tau;
  });
  parallel_for(static_cast<std::size_t>(n_baseline), options.workers, [&](std::size_t i) {
    RandomStream stream = root.substream(2 * i + 1);
    const double sd = noise_sd[i % k_phases];
    auto row = out.baseline.data.row(static_cast<Eigen::Index>(i));
    for (int t = 0; t < grid.size; ++t) row(t) = sd > 0.0 ? sd * stream.normal() : 0.0;
  });
  return out;
}

TracePair synthesize_traces(const ExperimentConfig& config, int n_heralded, int n_baseline, std::uint64_t seed,
                            const TraceOptions& options) {
  config.validate();
  if (options.sample_rate <= 2.0 * config.filter_fwhm_hz)
    throw ConfigError("sample rate must exceed twice the filter bandwidth");
  const PreparedStates states = prepare_states(config);
  // The trace shift itself produces the jitter, so the signal is the heralded
  // state before the jitter mixture, sent through the physical chain.
  const DetectionChain chain = config.physical_chain();
  TraceModel model{measured_state(chain, states.heralded), measured_state(chain, states.squeezed),
                   DoubleExpShape{double_exp_gamma(config.filter_fwhm_hz), 0.0}, config.jitter_sigma_s(),
                   config.phases_rad};
  return synthesize_traces(model, n_heralded, n_baseline, seed, options);
}

PcaResult pca_extract(const TraceMatrix& heralded, const TraceMatrix& baseline, int workers) {
  const int p = heralded.n_samples();
  if (baseline.n_samples() != p) throw ShapeMismatch("heralded and baseline traces differ in length");
  if (std::abs(heralded.sample_rate - baseline.sample_rate) > 1e-9 * heralded.sample_rate)
    throw ShapeMismatch("heralded and baseline traces differ in sample rate");
  if (heralded.n_traces() < 2 || baseline.n_traces() < 2) throw NoData("PCA needs at least two traces of each kind");

  // Covariance from per-block partial sums merged in block order.
  auto covariance = [&](const TraceMatrix& m) {
    const Eigen::Index n = m.data.rows();
    const RealVector mean = m.data.colwise().mean().transpose();
    constexpr Eigen::Index kBlock = 4096;
    const std::size_t blocks = static_cast<std::size_t>((n + kBlock - 1) / kBlock);
    std::vector<RealMatrix> partial(blocks);
    parallel_for(blocks, workers, [&](std::size_t b) {
      const Eigen::Index start = static_cast<Eigen::Index>(b) * kBlock;
      const Eigen::Index rows = std::min(kBlock, n - start);
      const RealMatrix centered = m.data.middleRows(start, rows).rowwise() - mean.transpose();
      partial[b] = centered.transpose() * centered;
    });
    RealMatrix c = RealMatrix::Zero(p, p);
    for (const auto& block : partial) c += block;
    return RealMatrix(c / static_cast<double>(n - 1));
  };
  const RealMatrix ch = covariance(heralded);
  const RealMatrix cb = covariance(baseline);
  const RealMatrix delta = 0.5 * ((ch - cb) + (ch - cb).transpose());

  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(delta);
  if (solver.info() != Eigen::Success) throw InvalidMode("covariance eigendecomposition failed");
  std::vector<double> eigenvalues(solver.eigenvalues().data(), solver.eigenvalues().data() + p);
  std::reverse(eigenvalues.begin(), eigenvalues.end());
  const double lambda1 = eigenvalues[0];
  if (p > 1 && lambda1 > 0.0 && lambda1 - eigenvalues[1] < 1e-6 * lambda1)
    throw AmbiguousMode("top two covariance eigenvalues are degenerate");

  RealVector v = solver.eigenvectors().col(p - 1);
  Eigen::Index peak = 0;
  v.cwiseAbs().maxCoeff(&peak);
  if (v(peak) < 0.0) v = -v;
  const TimeGrid grid = heralded.grid();
  std::vector<double> values(v.data(), v.data() + p);
  for (double& x : values) x /= std::sqrt(grid.step);

  // Largest eigenvalue expected from two independent sample covariances of
  // white noise at the baseline level.
  const double level = cb.diagonal().mean();
  auto edge = [&](double n) {
    const double ratio = p / n;
    return 2.0 * std::sqrt(ratio) + ratio;
  };
  const double floor = level * (edge(heralded.n_traces()) + edge(baseline.n_traces()));

  return PcaResult{ModeFunction::normalized(grid, std::move(values)), std::move(eigenvalues), floor,
                   lambda1 > floor};
}

std::vector<double> project_traces(const TraceMatrix& traces, const ModeFunction& mode) {
  const TimeGrid tg = traces.grid();
  const TimeGrid& mg = mode.grid();
  if (tg.size != mg.size || std::abs(tg.step - mg.step) > 1e-9 * tg.step ||
      std::abs(tg.start - mg.start) > 1e-6 * tg.step)
    throw ShapeMismatch("trace and mode grids are not aligned");
  const Eigen::Map<const RealVector> f(mode.values().data(), mg.size);
  const RealVector x = traces.data * f * tg.step;
  return std::vector<double>(x.data(), x.data() + x.size());
}

void write_traces_binary(const std::string& path, const TraceMatrix& traces) {
  static_assert(std::endian::native == std::endian::little, "trace files are written in host order");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  const std::uint32_t rows = static_cast<std::uint32_t>(traces.n_traces());
  const std::uint32_t cols = static_cast<std::uint32_t>(traces.n_samples());
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  out.write(reinterpret_cast<const char*>(&traces.sample_rate), sizeof(double));
  out.write(reinterpret_cast<const char*>(traces.data.data()),
            static_cast<std::streamsize>(sizeof(double) * traces.data.size()));
  if (!out) throw Error("failed writing " + path);
}

TraceMatrix read_traces_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::uint32_t rows = 0, cols = 0;
  TraceMatrix m;
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  in.read(reinterpret_cast<char*>(&m.sample_rate), sizeof(double));
  if (!in) throw ShapeMismatch("truncated trace file header");
  m.data.resize(rows, cols);
  in.read(reinterpret_cast<char*>(m.data.data()), static_cast<std::streamsize>(sizeof(double) * m.data.size()));
  if (!in) throw ShapeMismatch("trace file shorter than its header declares");
  m.herald_index = static_cast<int>(cols / 2);
  return m;
}

void write_traces_csv(const std::string& path, const TraceMatrix& traces) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  const TimeGrid grid = traces.grid();
  char buf[64];
  for (int t = 0; t < grid.size; ++t) {
    std::snprintf(buf, sizeof buf, "%.6g", grid.time(t) * 1e9);
    out << (t ? "," : "") << buf;
  }
  out << '\n';
  for (int i = 0; i < traces.n_traces(); ++i) {
    for (int t = 0; t < grid.size; ++t) {
      std::snprintf(buf, sizeof buf, "%.17g", traces.data(i, t));
      out << (t ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace cvtomo
