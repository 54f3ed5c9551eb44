#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>

#include "cvtomo/config.hpp"
#include "cvtomo/errors.hpp"
#include "cvtomo/io.hpp"
#include "cvtomo/pipeline.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cvtomo;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.cutoff = 20;
  c.n_samples = 3000;
  c.phases_rad = uniform_phases(6);
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path().string());
  return files;
}

}  // namespace

TEST_CASE("configuration") {
  const ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.squeeze().r() == doctest::Approx(c.coupling));
  CHECK(c.jitter_sigma_s() == doctest::Approx(130e-12 / 2.3548).epsilon(1e-4));
  CHECK(c.physical_chain().eta_post == doctest::Approx(c.eta_post));

  ExperimentConfig lossy = c;
  lossy.added_loss_db = 10.0;
  CHECK(lossy.physical_chain().eta_post == doctest::Approx(0.1 * c.eta_post));
  CHECK(lossy.nominal_chain().eta_post == doctest::Approx(c.eta_post));

  const std::string text = c.to_json();
  const ExperimentConfig back = ExperimentConfig::from_json(text);
  CHECK(back.to_json() == text);
  CHECK(back.hash() == c.hash());
  CHECK(c.hash().size() == 64);
  CHECK(lossy.hash() != c.hash());
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

  CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"cutof": 30})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"r": 0.3, "pump_power_mw": 2.0})"), ConfigError);
  // Giving r alone replaces the default pump specification.
  const ExperimentConfig by_r = ExperimentConfig::from_json(R"({"r": 0.3})");
  CHECK_FALSE(by_r.pump_power_mw.has_value());
  CHECK(by_r.squeeze().r() == doctest::Approx(0.3));
  CHECK_THROWS_AS(ExperimentConfig::from_json("{not json"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"cutoff": "big"})"), ConfigError);
  ExperimentConfig bad = c;
  bad.tap_reflectance = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.eta_pre = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.phases_rad.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("rate model fit") {
  const double a = 2.0e5, coupling = 0.18;
  auto model = [&](double p) { return a * std::pow(std::sinh(coupling * std::sqrt(p)), 2); };

  const std::vector<double> two{1.0, 25.0};
  const std::vector<double> two_rates{model(1.0), model(25.0)};
  const RateModelFit f2 = fit_rates(two, two_rates);
  CHECK(f2.coupling == doctest::Approx(coupling).epsilon(1e-8));
  CHECK(f2.amplitude_hz == doctest::Approx(a).epsilon(1e-8));
  for (double r : f2.residuals) CHECK(std::abs(r) < 1e-9);
  for (double p : {3.0, 10.0}) CHECK(f2.predict(p) == doctest::Approx(model(p)).epsilon(0.1));

  const std::vector<double> four{1.0, 3.0, 10.0, 25.0};
  std::vector<double> four_rates;
  for (double p : four) four_rates.push_back(model(p));
  const RateModelFit f4 = fit_rates(four, four_rates);
  CHECK(f4.coupling == doctest::Approx(coupling).epsilon(1e-6));

  // Purely linear rates are the small-c limit of the model.
  std::vector<double> linear;
  for (double p : four) linear.push_back(1000.0 * p);
  for (double r : fit_rates(four, linear).residuals) CHECK(std::abs(r) < 1e-6);

  const std::vector<double> one{1.0}, one_rate{10.0};
  CHECK_THROWS(fit_rates(one, one_rate));
  const std::vector<double> neg{-1.0, 2.0};
  CHECK_THROWS(fit_rates(neg, two_rates));

  CHECK(herald_rate(1e5, std::asinh(1.0), 0.05) == doctest::Approx(1e5));
  CHECK(herald_rate(1e5, std::asinh(1.0), 0.1) == doctest::Approx(2e5));
}

TEST_CASE("simulation is deterministic") {
  const ExperimentConfig c = small_config();
  const SimulationResult a = simulate_experiment(c, 1);
  const SimulationResult b = simulate_experiment(c, 3);
  CHECK(a.records.size() == c.n_samples);
  CHECK(a.records == b.records);
  ExperimentConfig other = c;
  other.seed = 2;
  CHECK(simulate_experiment(other).records != a.records);

  const PreparedStates& s = a.states;
  CHECK(s.jitter_efficiency < 1.0);
  CHECK(s.jitter_efficiency > 0.9);
  CHECK(testing::max_abs_diff(s.detected.matrix(), apply_loss(s.jittered, c.eta_pre).matrix()) < 1e-12);
  const MeasurementModel m = reconstruction_model(c, 10);
  CHECK(m.eta_pre() == doctest::Approx(c.eta_pre));
  CHECK(m.eta_eff() == doctest::Approx(psa_effective_efficiency(c.eta_post, c.psa_gain_db)));
}

TEST_CASE("vanishing tap with an ideal chain samples the photon-subtracted state") {
  ExperimentConfig c;
  c.cutoff = 30;
  c.r = 0.4;
  c.pump_power_mw.reset();
  c.tap_reflectance = 1e-4;
  c.eta_pre = 1.0;
  c.detector_eta = 1.0;
  c.jitter_fwhm_s = 0.0;
  c.psa_gain_db = 0.0;
  c.phases_rad = {0.0};
  c.n_samples = 10000;
  const SimulationResult sim = simulate_experiment(c);
  const DensityMatrix ideal = exact_subtract(squeezed_vacuum(SqueezeSpec::from_r(0.4), 30));
  CHECK(fidelity(sim.states.measured, ideal) > 0.999);

  std::vector<double> xs;
  for (const auto& r : sim.records) xs.push_back(r.value);
  std::sort(xs.begin(), xs.end());
  // CDF oracle by direct integration of the ideal marginal.
  double cdf = 0.0, last = -10.0, d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    cdf += testing::simpson([&](double x) { return marginal(ideal, 0.0, x); }, last, xs[i], 20);
    last = xs[i];
    const double n = static_cast<double>(xs.size());
    d = std::max({d, std::abs(cdf - i / n), std::abs((i + 1) / n - cdf)});
  }
  CHECK(d < 1.95 / std::sqrt(10000.0));
}

TEST_CASE("record and state files") {
  std::vector<QuadratureRecord> recs{{0.5, -1.25, std::nullopt}, {1.0, 0.125, 3.5}};
  CHECK(records_from_jsonl(records_to_jsonl(recs)) == recs);
  const DensityMatrix rho = testing::random_state(5, 3);
  CHECK(testing::max_abs_diff(state_from_json(state_to_json(rho)).matrix(), rho.matrix()) < 1e-15);
  const std::string csv = csv_text("abc", {"x", "y"}, {{1.0, 2.0}});
  CHECK(csv.rfind("# config_hash: abc\nx,y\n", 0) == 0);
  CHECK(run_label(ExperimentConfig{}) == "1mW");
}

TEST_CASE("report") {
  const fs::path empty = fresh_dir("cvtomo_report_empty");
  try {
    report_figures(empty.string());
    FAIL("expected MissingArtifacts");
  } catch (const MissingArtifacts& e) {
    const std::string what = e.what();
    CHECK(what.find("config.json") != std::string::npos);
    CHECK(what.find("pca.json") != std::string::npos);
    CHECK(what.find("rates.json") != std::string::npos);
    CHECK(what.find("reconstruction.json") != std::string::npos);
  }

  const fs::path root = fresh_dir("cvtomo_report_full");
  ExperimentConfig c = small_config();
  write_file((root / "config.json").string(), c.to_json());
  const std::string run = run_directory(root.string(), c);
  save_simulation(run, c, simulate_experiment(c));
  ReconstructOptions ro;
  ro.recon_dim = 8;
  ro.bootstrap_resamples = 0;
  reconstruct_run(run, ro);
  run_pca(root.string(), c, 400, 400);
  const std::vector<double> powers{1.0, 25.0}, rates{1000.0, 40000.0};
  write_rates(root.string(), c, powers, rates, fit_rates(powers, rates));

  report_figures(root.string());
  const auto first = snapshot(root);
  CHECK(first.count("summary.json") == 1);
  CHECK(first.count("fig4_wigner_1mW.csv") == 1);
  CHECK(first.count("fig3a_mode.csv") == 1);
  report_figures(root.string(), 3);
  CHECK(snapshot(root) == first);

  fs::remove_all(empty);
  fs::remove_all(root);
}
