// Command-line front end. Every subcommand works on one output root (--out).

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cvtomo/config.hpp"
#include "cvtomo/errors.hpp"
#include "cvtomo/io.hpp"
#include "cvtomo/pipeline.hpp"
#include "cvtomo/wigner.hpp"

using namespace cvtomo;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config_path;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  int workers = 1;
};

ExperimentConfig load_config(const Globals& g) {
  ExperimentConfig c = g.config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(g.config_path);
  if (g.seed) c.seed = *g.seed;
  c.validate();
  return c;
}

// The root config describes the base experiment every artifact derives from.
ExperimentConfig prepare_root(const Globals& g) {
  const ExperimentConfig c = load_config(g);
  fs::create_directories(g.out);
  write_file((fs::path(g.out) / "config.json").string(), c.to_json());
  update_manifest(g.out, c, {"config.json"});
  return c;
}

std::vector<std::pair<double, double>> parse_points(const std::vector<std::string>& items) {
  std::vector<std::pair<double, double>> points;
  for (const auto& s : items) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw ConfigError("rate point '" + s + "' must look like <mW>:<Hz>");
    points.emplace_back(std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1)));
  }
  return points;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heralded cat-state simulation and homodyne tomography"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "output root directory")->capture_default_str();
  app.add_option("--seed", g.seed, "override the config seed");
  app.add_option("--workers", g.workers, "worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "sample homodyne records for one or more pump powers");
  std::vector<double> pumps;
  std::optional<double> rate_amplitude;
  sim->add_option("--pump", pumps, "pump powers in mW (default: the config's own setting)")->delimiter(',');
  sim->add_option("--rate-amplitude", rate_amplitude, "herald-rate amplitude A in Hz, referenced to a 5% tap");

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "MLE reconstruction of simulated runs");
  std::vector<std::string> labels;
  ReconstructOptions ro;
  rec->add_option("--run", labels, "run labels (default: every simulated run)")->delimiter(',');
  rec->add_option("--recon-dim", ro.recon_dim, "Fock cutoff of the reconstruction")->capture_default_str();
  rec->add_option("--bootstrap", ro.bootstrap_resamples, "bootstrap resamples for W(0,0) errors, 0 to skip")
      ->capture_default_str();
  rec->add_option("--tol", ro.mle.tol, "log-likelihood gain per sample at which to stop")->capture_default_str();
  rec->add_option("--max-iter", ro.mle.max_iter, "iteration cap")->capture_default_str();

  // wigner
  auto* wig = app.add_subcommand("wigner", "Wigner grids of reconstructed runs");

  // pca
  auto* pca = app.add_subcommand("pca", "temporal-mode extraction from synthetic traces");
  int n_heralded = 50000, n_baseline = 50000;
  bool save_traces = false;
  pca->add_option("--heralded", n_heralded, "heralded traces")->capture_default_str();
  pca->add_option("--baseline", n_baseline, "baseline traces")->capture_default_str();
  pca->add_flag("--save-traces", save_traces, "also write the trace matrices (binary)");

  // rates
  auto* rates = app.add_subcommand("rates", "fit the herald-rate model");
  std::vector<std::string> points{"1:28000", "25:900000"};
  rates->add_option("--point", points, "<mW>:<Hz> pairs")->delimiter(',')->capture_default_str();

  // sweep-loss
  auto* sweep = app.add_subcommand("sweep-loss", "added post-amplifier loss sweep");
  std::vector<double> losses{0.0, 5.0, 10.0, 15.0, 20.0};
  SweepOptions so;
  sweep->add_option("--loss-db", losses, "added losses in dB")->delimiter(',')->capture_default_str();
  sweep->add_option("--recon-dim", so.recon_dim, "Fock cutoff of the reconstruction")->capture_default_str();
  sweep->add_option("--bootstrap", so.bootstrap_resamples, "bootstrap resamples per point, 0 to skip")
      ->capture_default_str();

  // report
  auto* report = app.add_subcommand("report", "regenerate figure data and summary.json from stored artifacts");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const ExperimentConfig base = prepare_root(g);
      std::vector<ExperimentConfig> runs;
      if (pumps.empty()) runs.push_back(base);
      for (double p : pumps) {
        ExperimentConfig c = base;
        c.r.reset();
        c.pump_power_mw = p;
        c.validate();
        runs.push_back(c);
      }
      for (const auto& c : runs) {
        const std::string dir = run_directory(g.out, c);
        const SimulationResult result = simulate_experiment(c, g.workers, rate_amplitude);
        save_simulation(dir, c, result);
        std::printf("%s: %zu records, herald success probability %.4g\n", dir.c_str(), result.records.size(),
                    result.states.success_probability);
      }
    } else if (rec->parsed()) {
      if (!g.config_path.empty() || g.seed) prepare_root(g);
      ro.workers = g.workers;
      std::vector<std::string> dirs;
      if (labels.empty()) {
        dirs = list_runs(g.out, "records.jsonl");
      } else {
        for (const auto& l : labels) dirs.push_back((fs::path(g.out) / "runs" / l).string());
      }
      if (dirs.empty()) throw MissingArtifacts("no simulated runs under " + g.out + "/runs");
      for (const auto& d : dirs) {
        const RunReconstruction r = reconstruct_run(d, ro);
        std::printf("%s: W(0,0) = %+.4f +- %.4f, %d iterations%s\n", r.label.c_str(), r.w00, r.w00_err,
                    r.fit.iterations, r.fit.converged ? "" : " (not converged)");
      }
    } else if (wig->parsed()) {
      const auto dirs = list_runs(g.out, "reconstruction.json");
      if (dirs.empty()) throw MissingArtifacts("no reconstructed runs under " + g.out + "/runs");
      for (const auto& d : dirs) std::printf("%s\n", write_wigner_figure(g.out, d, g.workers).c_str());
    } else if (pca->parsed()) {
      const ExperimentConfig c = prepare_root(g);
      const PcaRun r = run_pca(g.out, c, n_heralded, n_baseline, g.workers, save_traces);
      std::printf("mode overlap %.5f, spectrum FWHM %.4g GHz, %s\n", r.overlap_with_planted, r.spectrum.fwhm_hz * 1e-9,
                  r.pca.significant ? "significant" : "below noise floor");
    } else if (rates->parsed()) {
      const ExperimentConfig c = prepare_root(g);
      std::vector<double> p, hz;
      for (auto [mw, rate] : parse_points(points)) {
        p.push_back(mw);
        hz.push_back(rate);
      }
      const RateModelFit fit = fit_rates(p, hz);
      write_rates(g.out, c, p, hz, fit);
      std::printf("A = %.6g Hz, c = %.6g mW^-1/2\n", fit.amplitude_hz, fit.coupling);
      for (double mw : {1.0, 3.0, 10.0, 25.0}) std::printf("  %5.1f mW -> %.4g Hz\n", mw, fit.predict(mw));
    } else if (sweep->parsed()) {
      const ExperimentConfig c = prepare_root(g);
      so.workers = g.workers;
      const auto rows = sweep_loss(c, losses, so);
      write_sweep(g.out, c, rows);
      for (const auto& r : rows)
        std::printf("%5.1f dB: W(0,0) = %+.4f, fidelity %.4f\n", r.loss_db, r.w00, r.fidelity);
    } else if (report->parsed()) {
      for (const auto& f : report_figures(g.out, g.workers)) std::printf("%s\n", f.c_str());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
