#include <algorithm>
#include <cmath>
#include <random>

#include "cvtomo/channels.hpp"
#include "cvtomo/errors.hpp"
#include "cvtomo/homodyne.hpp"
#include "cvtomo/states.hpp"
#include "cvtomo/tomography.hpp"
#include "cvtomo/wigner.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cvtomo;
using testing::random_state;

namespace {

const std::vector<double> kPhases = uniform_phases(12);

MeasurementModel ideal_model(int dim, double eta = 1.0) {
  return build_povm(kPhases, default_bin_edges(), eta, dim);
}

// Exact cell probabilities scaled to pseudo-counts: noise-free data.
BinnedData exact_data(const DensityMatrix& rho, const MeasurementModel& model, double per_phase) {
  BinnedData data;
  data.counts = cell_probabilities(rho, model) * per_phase;
  data.total = data.counts.sum();
  return data;
}

}  // namespace

TEST_CASE("vacuum and single photon are recovered") {
  const MeasurementModel model = ideal_model(10);
  const auto vac = sample(DensityMatrix::vacuum(10), kPhases, 2000, 11);
  CHECK(fidelity(mle_reconstruct(vac, model).rho, DensityMatrix::vacuum(10)) >= 0.99);

  const auto one = sample(DensityMatrix::fock(1, 10), kPhases, 5000, 12);
  const MleResult r = mle_reconstruct(one, model);
  CHECK(r.rho(1, 1).real() >= 0.95);
  CHECK(r.converged);
  CHECK(r.monotone);
}

TEST_CASE("reconstruction through a known loss recovers the lossless cat") {
  const DensityMatrix cat = ideal_cat(1.0, -1, 12);
  const double eta = 0.7;
  const auto records = sample(apply_loss(cat, eta), kPhases, 10000, 21);
  const MleResult r = mle_reconstruct(records, ideal_model(12, eta));
  CHECK(fidelity(r.rho, cat) >= 0.98);
  CHECK(wigner_origin(r.rho) < 0.0);
}

TEST_CASE("log-likelihood closed forms") {
  const std::vector<double> one_phase{0.0};
  const std::vector<double> no_edges;
  const MeasurementModel trivial = build_povm(one_phase, no_edges, 1.0, 5);
  const auto recs = sample(random_state(5, 3), one_phase, 200, 4);
  CHECK(loglikelihood(random_state(5, 9), recs, trivial) == doctest::Approx(0.0));

  const std::vector<double> split{0.0};
  const MeasurementModel halves = build_povm(one_phase, split, 1.0, 5);
  CHECK(loglikelihood(DensityMatrix::vacuum(5), recs, halves) == doctest::Approx(200.0 * std::log(0.5)));

  // Two outcomes at one phase: the unconstrained optimum is the Bernoulli MLE,
  // reachable here by a displaced state, so the reconstruction must attain it.
  BinnedData data;
  data.counts = RealMatrix(1, 2);
  data.counts << 300.0, 700.0;
  data.total = 1000.0;
  const MeasurementModel coarse = build_povm(one_phase, split, 1.0, 8);
  MleOptions opt;
  opt.tol = 1e-12;
  opt.max_iter = 20000;
  const MleResult r = mle_reconstruct(data, coarse, opt);
  const double bernoulli = 300.0 * std::log(0.3) + 700.0 * std::log(0.7);
  CHECK(r.final_loglik <= bernoulli + 1e-9);
  CHECK(r.final_loglik == doctest::Approx(bernoulli).epsilon(1e-5));
  CHECK(r.monotone);
}

TEST_CASE("noise-free data: the true state is the fixed point") {
  const DensityMatrix truth = random_state(4, 55);
  const MeasurementModel model = ideal_model(4);
  const BinnedData data = exact_data(truth, model, 1e6);
  MleOptions opt;
  opt.tol = 1e-14;
  opt.max_iter = 20000;
  const MleResult r = mle_reconstruct(data, model, opt);
  CHECK(fidelity(r.rho, truth) >= 0.9999);
  const double best = loglikelihood(truth, data, model);
  CHECK(r.final_loglik <= best + 1e-6 * std::abs(best));
  CHECK(std::abs(r.final_loglik - best) <= 1e-9 * std::abs(best));
  for (std::size_t i = 1; i < r.loglik_trace.size(); ++i)
    CHECK(r.loglik_trace[i] >= r.loglik_trace[i - 1] - 1e-12 * std::abs(r.loglik_trace[i - 1]));
}

TEST_CASE("records order and worker count do not matter") {
  const MeasurementModel model = ideal_model(8);
  auto recs = sample(ideal_cat(0.6, -1, 8), kPhases, 1000, 31);
  MleOptions one_worker;
  const MleResult a = mle_reconstruct(recs, model, one_worker);
  std::mt19937_64 gen(5);
  std::shuffle(recs.begin(), recs.end(), gen);
  MleOptions many;
  many.workers = 4;
  const MleResult b = mle_reconstruct(recs, model, many);
  CHECK(a.iterations == b.iterations);
  CHECK(testing::max_abs_diff(a.rho.matrix(), b.rho.matrix()) < 1e-12);
}

TEST_CASE("empty data is rejected") {
  const std::vector<QuadratureRecord> none;
  CHECK_THROWS_AS(mle_reconstruct(none, ideal_model(4)), NoData);
}

TEST_CASE("bootstrap") {
  const MeasurementModel model = ideal_model(6);
  const DensityMatrix state = apply_loss(DensityMatrix::fock(1, 6), 0.8);
  MleOptions opt;
  opt.tol = 1e-7;

  const auto small = sample(state, kPhases, 250, 41);
  const BootstrapSummary tr = bootstrap(
      small, model, [](const DensityMatrix& r) { return r.trace(); }, "trace", 50, 7, opt);
  CHECK(tr.n_resamples == 50);
  CHECK(tr.std_error < 1e-9);
  CHECK_THROWS_AS(bootstrap(small, model, wigner_origin, "w00", 10, 7, opt), DomainError);

  const BootstrapSummary s1 = bootstrap(small, model, wigner_origin, "w00", 60, 8, opt);
  const auto large = sample(state, kPhases, 1000, 42);
  const BootstrapSummary s4 = bootstrap(large, model, wigner_origin, "w00", 60, 8, opt);
  // Four times the data should halve the spread; allow for resampling noise.
  const double ratio = s1.std_error / s4.std_error;
  CHECK(ratio > 1.4);
  CHECK(ratio < 2.8);

  MleOptions parallel = opt;
  parallel.workers = 3;
  const BootstrapSummary again = bootstrap(small, model, wigner_origin, "w00", 60, 8, parallel);
  CHECK(again.values == s1.values);
}
