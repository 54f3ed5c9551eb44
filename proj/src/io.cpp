#include "cvtomo/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "cvtomo/errors.hpp"
#include "json.hpp"

namespace cvtomo {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::uint64_t kBootstrapSalt = 0xb0075742ULL;

std::string join(const std::string& a, const std::string& b) { return (fs::path(a) / b).string(); }

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

json state_json(const DensityMatrix& rho) {
  const int d = rho.dim();
  json re = json::array(), im = json::array();
  for (int m = 0; m < d; ++m) {
    json rr = json::array(), ii = json::array();
    for (int n = 0; n < d; ++n) {
      rr.push_back(rho(m, n).real());
      ii.push_back(rho(m, n).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ii));
  }
  return json{{"dim", d}, {"real", std::move(re)}, {"imag", std::move(im)}};
}

DensityMatrix state_from(const json& j) {
  try {
    const int d = j.at("dim").get<int>();
    Matrix m(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        m(a, b) = Complex(j.at("real").at(a).at(b).get<double>(), j.at("imag").at(a).at(b).get<double>());
    return DensityMatrix(m);
  } catch (const json::exception& e) {
    throw InvalidState(std::string("malformed state JSON: ") + e.what());
  }
}

json parse_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error("cannot parse " + path + ": " + e.what());
  }
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_nan(const json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

ExperimentConfig root_or_run_config(const std::string& root, const std::string& fallback_dir) {
  const std::string root_config = join(root, "config.json");
  return ExperimentConfig::load(fs::exists(root_config) ? root_config : join(fallback_dir, "config.json"));
}

// Mode stored in pca.json in SI units; the grid is rebuilt from the sample rate and herald index.
ModeFunction mode_from(const json& j) {
  const double rate = j.at("sample_rate_hz").get<double>();
  const int herald = j.at("herald_index").get<int>();
  std::vector<double> values = j.at("mode_si").get<std::vector<double>>();
  const TimeGrid grid{-herald / rate, 1.0 / rate, static_cast<int>(values.size())};
  return ModeFunction::normalized(grid, std::move(values));
}

void write_fig3(const std::string& root, const std::string& hash, const ModeFunction& mode,
                const Spectrum& spec) {
  std::vector<std::vector<double>> mode_rows, spec_rows;
  const TimeGrid& g = mode.grid();
  for (int i = 0; i < g.size; ++i) mode_rows.push_back({g.time(i) * 1e9, mode.values()[i] * std::sqrt(1e-9)});
  for (std::size_t k = 0; k < spec.freq_hz.size(); ++k) spec_rows.push_back({spec.freq_hz[k] * 1e-9, spec.power[k]});
  write_file(join(root, "fig3a_mode.csv"), csv_text(hash, {"t_ns", "f"}, mode_rows));
  write_file(join(root, "fig3b_spectrum.csv"), csv_text(hash, {"f_GHz", "power"}, spec_rows));
}

void write_fig5(const std::string& root, const std::string& hash, std::span<const SweepRow> rows) {
  std::vector<std::vector<double>> out;
  for (const auto& r : rows) out.push_back({r.loss_db, r.w00, r.w00_err, r.fidelity});
  write_file(join(root, "fig5.csv"), csv_text(hash, {"loss_db", "w00", "w00_err", "fidelity"}, out));
}

std::vector<SweepRow> sweep_rows_from(const json& j) {
  std::vector<SweepRow> rows;
  for (const auto& r : j.at("rows")) {
    SweepRow row;
    row.loss_db = r.at("loss_db").get<double>();
    row.w00 = r.at("w00").get<double>();
    row.w00_err = number_or_nan(r.at("w00_err"));
    row.fidelity = r.at("fidelity").get<double>();
    row.iterations = r.at("iterations").get<int>();
    row.converged = r.at("converged").get<bool>();
    row.monotone = r.at("monotone").get<bool>();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("failed writing " + path);
}

std::string records_to_jsonl(std::span<const QuadratureRecord> records) {
  std::string out;
  for (const auto& r : records) {
    ordered_json j;
    j["phase_rad"] = r.phase;
    j["value"] = r.value;
    j["herald_t_ns"] = r.herald_time_ns ? ordered_json(*r.herald_time_ns) : ordered_json(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<QuadratureRecord> records_from_jsonl(const std::string& text) {
  std::vector<QuadratureRecord> records;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      QuadratureRecord r;
      r.phase = j.at("phase_rad").get<double>();
      r.value = j.at("value").get<double>();
      if (j.contains("herald_t_ns") && !j["herald_t_ns"].is_null()) r.herald_time_ns = j["herald_t_ns"].get<double>();
      records.push_back(r);
    } catch (const json::exception& e) {
      throw Error("records line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::string state_to_json(const DensityMatrix& rho) { return state_json(rho).dump(); }

DensityMatrix state_from_json(const std::string& text) {
  try {
    return state_from(json::parse(text));
  } catch (const json::parse_error& e) {
    throw InvalidState(std::string("malformed state JSON: ") + e.what());
  }
}

std::string csv_text(const std::string& config_hash, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  std::string out = "# config_hash: " + config_hash + "\n";
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_number(row[i]);
    }
    out += '\n';
  }
  return out;
}

void update_manifest(const std::string& dir, const ExperimentConfig& config, const std::vector<std::string>& files) {
  const std::string path = join(dir, "manifest.json");
  json manifest;
  if (fs::exists(path)) manifest = parse_json_file(path);
  if (!manifest.is_object() || manifest.value("config_hash", "") != config.hash()) manifest = json::object();
  manifest["tool"] = kToolName;
  manifest["tool_version"] = kToolVersion;
  manifest["config"] = json::parse(config.to_json());
  manifest["config_hash"] = config.hash();
  if (!manifest.contains("files")) manifest["files"] = json::object();
  for (const auto& f : files) manifest["files"][f] = sha256_hex(read_file(join(dir, f)));
  write_file(path, manifest.dump(2) + "\n");
}

std::string run_label(const ExperimentConfig& config) {
  char buf[48];
  if (config.pump_power_mw) {
    std::snprintf(buf, sizeof buf, "%gmW", *config.pump_power_mw);
  } else {
    std::snprintf(buf, sizeof buf, "r%g", *config.r);
  }
  return buf;
}

std::string run_directory(const std::string& root, const ExperimentConfig& config) {
  return (fs::path(root) / "runs" / run_label(config)).string();
}

void save_simulation(const std::string& run_dir, const ExperimentConfig& config, const SimulationResult& result) {
  const std::string hash = config.hash();
  write_file(join(run_dir, "config.json"), config.to_json() + "\n");
  write_file(join(run_dir, "records.jsonl"), records_to_jsonl(result.records));
  json truth;
  truth["config_hash"] = hash;
  truth["label"] = run_label(config);
  truth["r"] = config.squeeze().r();
  truth["success_probability"] = result.states.success_probability;
  truth["jitter_efficiency"] = result.states.jitter_efficiency;
  truth["herald_rate_hz"] = result.herald_rate_hz ? json(*result.herald_rate_hz) : json(nullptr);
  truth["w00_detected"] = wigner_origin(result.states.detected);
  truth["detected_state"] = state_json(result.states.detected);
  write_file(join(run_dir, "truth.json"), truth.dump(2) + "\n");
  update_manifest(run_dir, config, {"config.json", "records.jsonl", "truth.json"});
}

RunReconstruction reconstruct_run(const std::string& run_dir, const ReconstructOptions& options) {
  const ExperimentConfig config = ExperimentConfig::load(join(run_dir, "config.json"));
  const std::string records_path = join(run_dir, "records.jsonl");
  if (!fs::exists(records_path)) throw MissingArtifacts("missing artifacts: " + records_path);
  const auto records = records_from_jsonl(read_file(records_path));
  const MeasurementModel model = reconstruction_model(config, options.recon_dim);
  MleOptions mle = options.mle;
  mle.workers = options.workers;

  RunReconstruction out{run_label(config), config.pump_power_mw, DensityMatrix::vacuum(1), 0.0,
                        std::numeric_limits<double>::quiet_NaN(), mle_reconstruct(records, model, mle),
                        std::nullopt, std::nullopt};
  out.rho = out.fit.rho;
  out.w00 = wigner_origin(out.rho);
  if (options.bootstrap_resamples > 0) {
    out.w00_err = bootstrap(records, model, wigner_origin, "w00", options.bootstrap_resamples,
                            config.seed ^ kBootstrapSalt, mle)
                      .std_error;
  }
  const std::string truth_path = join(run_dir, "truth.json");
  if (fs::exists(truth_path)) {
    const DensityMatrix truth = state_from(parse_json_file(truth_path).at("detected_state"));
    const int d = std::max(truth.dim(), out.rho.dim());
    out.fidelity_to_truth = fidelity(out.rho.padded(d), truth.padded(d));
    out.true_w00 = wigner_origin(truth);
  }

  json j;
  j["config_hash"] = config.hash();
  j["label"] = out.label;
  j["pump_power_mw"] = config.pump_power_mw ? json(*config.pump_power_mw) : json(nullptr);
  j["r"] = config.squeeze().r();
  j["recon_dim"] = options.recon_dim;
  j["w00"] = out.w00;
  j["w00_err"] = nullable(out.w00_err);
  j["error_method"] = "phase-stratified bootstrap";
  j["bootstrap_resamples"] = options.bootstrap_resamples;
  j["iterations"] = out.fit.iterations;
  j["converged"] = out.fit.converged;
  j["monotone"] = out.fit.monotone;
  j["floor_engaged"] = out.fit.floor_engaged;
  j["final_loglik"] = out.fit.final_loglik;
  j["loglik_trace"] = out.fit.loglik_trace;
  j["fidelity_to_truth"] = out.fidelity_to_truth ? json(*out.fidelity_to_truth) : json(nullptr);
  j["true_w00"] = out.true_w00 ? json(*out.true_w00) : json(nullptr);
  j["state"] = state_json(out.rho);
  write_file(join(run_dir, "reconstruction.json"), j.dump(2) + "\n");
  update_manifest(run_dir, config, {"reconstruction.json"});
  return out;
}

std::vector<std::string> list_runs(const std::string& root, const std::string& required_file) {
  std::vector<std::string> runs;
  const fs::path dir = fs::path(root) / "runs";
  if (!fs::is_directory(dir)) return runs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory() && fs::exists(entry.path() / required_file)) runs.push_back(entry.path().string());
  std::sort(runs.begin(), runs.end());
  return runs;
}

std::string write_wigner_figure(const std::string& root, const std::string& run_dir, int workers) {
  const json rec = parse_json_file(join(run_dir, "reconstruction.json"));
  const DensityMatrix rho = state_from(rec.at("state"));
  const auto axis = default_wigner_axis();
  const WignerField field = wigner_grid(rho, axis, axis, workers);
  std::vector<std::vector<double>> rows;
  rows.reserve(axis.size() * axis.size());
  for (std::size_t i = 0; i < axis.size(); ++i)
    for (std::size_t j = 0; j < axis.size(); ++j) rows.push_back({axis[i], axis[j], field.values(i, j)});
  const std::string name = "fig4_wigner_" + rec.at("label").get<std::string>() + ".csv";
  write_file(join(root, name), csv_text(rec.at("config_hash").get<std::string>(), {"x", "p", "W"}, rows));
  update_manifest(root, root_or_run_config(root, run_dir), {name});
  return name;
}

PcaRun run_pca(const std::string& root, const ExperimentConfig& config, int n_heralded, int n_baseline, int workers,
               bool save_traces) {
  TraceOptions options;
  options.workers = workers;
  const TracePair traces = synthesize_traces(config, n_heralded, n_baseline, config.seed, options);
  PcaRun run{pca_extract(traces.heralded, traces.baseline, workers), Spectrum{}, 0.0};
  run.spectrum = spectrum(run.pca.mode);
  const ModeFunction planted =
      sample_shape(DoubleExpShape{double_exp_gamma(config.filter_fwhm_hz), 0.0}, traces.heralded.grid());
  run.overlap_with_planted = std::abs(run.pca.mode.overlap(planted));

  const std::string hash = config.hash();
  json j;
  j["config_hash"] = hash;
  j["n_heralded"] = n_heralded;
  j["n_baseline"] = n_baseline;
  j["sample_rate_hz"] = traces.heralded.sample_rate;
  j["herald_index"] = traces.heralded.herald_index;
  j["mode_si"] = run.pca.mode.values();
  const std::size_t keep = std::min<std::size_t>(10, run.pca.eigenvalues.size());
  j["eigenvalues"] = std::vector<double>(run.pca.eigenvalues.begin(), run.pca.eigenvalues.begin() + keep);
  j["noise_floor"] = run.pca.noise_floor;
  j["significant"] = run.pca.significant;
  j["overlap_with_planted"] = run.overlap_with_planted;
  j["spectrum_fwhm_hz"] = run.spectrum.fwhm_hz;
  write_file(join(root, "pca.json"), j.dump(2) + "\n");
  write_fig3(root, hash, run.pca.mode, run.spectrum);
  std::vector<std::string> files{"pca.json", "fig3a_mode.csv", "fig3b_spectrum.csv"};
  if (save_traces) {
    write_traces_binary(join(root, "traces_heralded.bin"), traces.heralded);
    write_traces_binary(join(root, "traces_baseline.bin"), traces.baseline);
    files.push_back("traces_heralded.bin");
    files.push_back("traces_baseline.bin");
  }
  update_manifest(root, config, files);
  return run;
}

void write_rates(const std::string& root, const ExperimentConfig& config, std::span<const double> powers_mw,
                 std::span<const double> rates_hz, const RateModelFit& fit) {
  json j;
  j["config_hash"] = config.hash();
  j["model"] = "R = A sinh^2(c sqrt(P))";
  j["powers_mw"] = std::vector<double>(powers_mw.begin(), powers_mw.end());
  j["rates_hz"] = std::vector<double>(rates_hz.begin(), rates_hz.end());
  j["amplitude_hz"] = fit.amplitude_hz;
  j["coupling_per_sqrt_mw"] = fit.coupling;
  j["residuals"] = fit.residuals;
  json predictions = json::array();
  for (double p : {1.0, 3.0, 10.0, 25.0}) predictions.push_back({{"pump_mw", p}, {"rate_hz", fit.predict(p)}});
  j["predictions"] = predictions;
  write_file(join(root, "rates.json"), j.dump(2) + "\n");
  update_manifest(root, config, {"rates.json"});
}

void write_sweep(const std::string& root, const ExperimentConfig& config, std::span<const SweepRow> rows) {
  const std::string hash = config.hash();
  json j;
  j["config_hash"] = hash;
  j["error_method"] = "phase-stratified bootstrap";
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"loss_db", r.loss_db},
                   {"w00", r.w00},
                   {"w00_err", nullable(r.w00_err)},
                   {"fidelity", r.fidelity},
                   {"iterations", r.iterations},
                   {"converged", r.converged},
                   {"monotone", r.monotone}});
  }
  j["rows"] = arr;
  write_file(join(root, "sweep.json"), j.dump(2) + "\n");
  write_fig5(root, hash, rows);
  update_manifest(root, config, {"sweep.json", "fig5.csv"});
}

std::vector<std::string> report_figures(const std::string& root, int workers) {
  std::vector<std::string> missing;
  for (const char* f : {"config.json", "pca.json", "rates.json"})
    if (!fs::exists(join(root, f))) missing.push_back(join(root, f));
  const auto runs = list_runs(root, "reconstruction.json");
  if (runs.empty()) missing.push_back(join(root, "runs/<label>/reconstruction.json"));
  if (!missing.empty()) {
    std::string msg = "missing artifacts:";
    for (const auto& m : missing) msg += " " + m;
    throw MissingArtifacts(msg);
  }

  const ExperimentConfig config = ExperimentConfig::load(join(root, "config.json"));
  const std::string hash = config.hash();
  std::vector<std::string> written;

  const json pca = parse_json_file(join(root, "pca.json"));
  const ModeFunction mode = mode_from(pca);
  const Spectrum spec = spectrum(mode);
  write_fig3(root, pca.at("config_hash").get<std::string>(), mode, spec);
  written.push_back("fig3a_mode.csv");
  written.push_back("fig3b_spectrum.csv");

  // Negativity table ordered by pump power (squeezing-specified runs last, by r).
  struct Entry {
    double key;
    json row;
  };
  std::vector<Entry> entries;
  for (const auto& run : runs) {
    written.push_back(write_wigner_figure(root, run, workers));
    const json rec = parse_json_file(join(run, "reconstruction.json"));
    json row;
    row["label"] = rec.at("label");
    row["pump_power_mw"] = rec.at("pump_power_mw");
    row["r"] = rec.at("r");
    row["w00"] = rec.at("w00");
    row["w00_err"] = rec.at("w00_err");
    row["fidelity_to_truth"] = rec.at("fidelity_to_truth");
    row["true_w00"] = rec.at("true_w00");
    row["converged"] = rec.at("converged");
    row["config_hash"] = rec.at("config_hash");
    const double key = rec.at("pump_power_mw").is_null() ? 1e300 + rec.at("r").get<double>()
                                                         : rec.at("pump_power_mw").get<double>();
    entries.push_back({key, row});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.key < b.key; });

  json summary;
  summary["config_hash"] = hash;
  summary["tool"] = kToolName;
  summary["tool_version"] = kToolVersion;
  summary["wigner_convention"] = "hbar = 1, x = (a + a^dag)/sqrt(2), vacuum W(0,0) = 1/pi";
  summary["error_method"] = "phase-stratified bootstrap";
  json negativities = json::array();
  for (const auto& e : entries) negativities.push_back(e.row);
  summary["negativities"] = negativities;

  const json rates = parse_json_file(join(root, "rates.json"));
  summary["rates"] = {{"powers_mw", rates.at("powers_mw")},
                      {"rates_hz", rates.at("rates_hz")},
                      {"amplitude_hz", rates.at("amplitude_hz")},
                      {"coupling_per_sqrt_mw", rates.at("coupling_per_sqrt_mw")},
                      {"residuals", rates.at("residuals")},
                      {"predictions", rates.at("predictions")}};
  summary["pca"] = {{"overlap_with_planted", pca.at("overlap_with_planted")},
                    {"spectrum_fwhm_hz", spec.fwhm_hz},
                    {"significant", pca.at("significant")},
                    {"eigenvalues", pca.at("eigenvalues")}};

  const std::string sweep_path = join(root, "sweep.json");
  if (fs::exists(sweep_path)) {
    const json sweep = parse_json_file(sweep_path);
    const auto rows = sweep_rows_from(sweep);
    write_fig5(root, sweep.at("config_hash").get<std::string>(), rows);
    written.push_back("fig5.csv");
    summary["loss_sweep"] = sweep.at("rows");
  } else {
    summary["loss_sweep"] = nullptr;
  }
  write_file(join(root, "summary.json"), summary.dump(2) + "\n");
  written.push_back("summary.json");
  update_manifest(root, config, written);
  return written;
}

}  // namespace cvtomo
