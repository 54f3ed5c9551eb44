#pragma once

// Files and run directories.
//
// A run root holds config.json and manifest.json plus root-level artifacts
// (pca.json, rates.json, sweep.json, summary.json and the fig*.csv files).
// Each simulated operating point lives in runs/<label>/ with its own
// config.json, records.jsonl, truth.json, reconstruction.json and manifest.
// Every CSV starts with a "# config_hash: <sha256>" line and every JSON
// artifact carries a "config_hash" field.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cvtomo/config.hpp"
#include "cvtomo/homodyne.hpp"
#include "cvtomo/pipeline.hpp"
#include "cvtomo/temporal.hpp"
#include "cvtomo/tomography.hpp"
#include "cvtomo/wigner.hpp"

namespace cvtomo {

inline constexpr const char* kToolName = "cvtomo";
inline constexpr const char* kToolVersion = "0.1.0";

std::string read_file(const std::string& path);
/// Creates parent directories as needed.
void write_file(const std::string& path, const std::string& content);

/// One JSON object per line: {"phase_rad", "value", "herald_t_ns"}.
std::string records_to_jsonl(std::span<const QuadratureRecord> records);
std::vector<QuadratureRecord> records_from_jsonl(const std::string& text);

std::string state_to_json(const DensityMatrix& rho);
DensityMatrix state_from_json(const std::string& text);

/// Rows of numbers with a config-hash comment and a header line.
std::string csv_text(const std::string& config_hash, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

/// Adds (or refreshes) the content hashes of `files` in dir/manifest.json.
void update_manifest(const std::string& dir, const ExperimentConfig& config, const std::vector<std::string>& files);

/// "1mW" style label for pump-specified runs, "r0.5" for squeezing-specified ones.
std::string run_label(const ExperimentConfig& config);
std::string run_directory(const std::string& root, const ExperimentConfig& config);

/// Writes config.json, records.jsonl, truth.json and the manifest.
void save_simulation(const std::string& run_dir, const ExperimentConfig& config, const SimulationResult& result);

struct ReconstructOptions {
  int recon_dim = 15;
  int bootstrap_resamples = 50;  ///< 0 skips error bars
  int workers = 1;
  MleOptions mle;
};

struct RunReconstruction {
  std::string label;
  std::optional<double> pump_power_mw;
  DensityMatrix rho;
  double w00 = 0.0;
  double w00_err = 0.0;
  MleResult fit;
  std::optional<double> fidelity_to_truth;
  std::optional<double> true_w00;
};

/// Reads a simulated run directory, reconstructs it and writes reconstruction.json.
RunReconstruction reconstruct_run(const std::string& run_dir, const ReconstructOptions& options = {});

/// Run directories under root/runs that contain `required_file`, sorted by name.
std::vector<std::string> list_runs(const std::string& root, const std::string& required_file);

/// fig4_wigner_<label>.csv in `root` from the run's reconstruction.
std::string write_wigner_figure(const std::string& root, const std::string& run_dir, int workers = 1);

struct PcaRun {
  PcaResult pca;
  Spectrum spectrum;
  double overlap_with_planted = 0.0;
};

/// Synthesizes traces from `config`, extracts the mode and writes pca.json,
/// fig3a_mode.csv and fig3b_spectrum.csv to `root` (traces.bin when asked).
PcaRun run_pca(const std::string& root, const ExperimentConfig& config, int n_heralded, int n_baseline,
               int workers = 1, bool save_traces = false);

void write_rates(const std::string& root, const ExperimentConfig& config, std::span<const double> powers_mw,
                 std::span<const double> rates_hz, const RateModelFit& fit);

/// sweep.json plus fig5.csv.
void write_sweep(const std::string& root, const ExperimentConfig& config, std::span<const SweepRow> rows);

/// Regenerates fig3a/fig3b, fig4 per run, fig5 (when a sweep exists) and
/// summary.json from stored artifacts. Throws MissingArtifacts listing every
/// absent input. Returns the files written.
std::vector<std::string> report_figures(const std::string& root, int workers = 1);

}  // namespace cvtomo
