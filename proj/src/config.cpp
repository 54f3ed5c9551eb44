#include "cvtomo/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <openssl/sha.h>

#include "cvtomo/errors.hpp"
#include "json.hpp"

namespace cvtomo {
namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "cutoff",        "pump_power_mw", "coupling",        "r",           "tap_reflectance", "eta_pre",
      "eta_post",      "psa_gain_db",   "added_loss_db",   "filter_fwhm_hz", "jitter_fwhm_s", "detector_eta",
      "dark_prob",     "phases_rad",    "n_samples",       "seed"};
  return keys;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

bool in_unit_interval(double v) { return v > 0.0 && v <= 1.0; }

template <typename T>
T get_field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  require(cutoff >= 10, "cutoff must be >= 10");
  require(pump_power_mw.has_value() != r.has_value(), "set exactly one of pump_power_mw and r");
  if (pump_power_mw) {
    require(std::isfinite(*pump_power_mw) && *pump_power_mw >= 0.0, "pump_power_mw must be >= 0");
    require(std::isfinite(coupling) && coupling > 0.0, "coupling must be > 0");
  }
  if (r) require(std::isfinite(*r) && *r >= 0.0, "r must be >= 0");
  require(tap_reflectance > 0.0 && tap_reflectance < 1.0, "tap_reflectance must lie in (0, 1)");
  require(in_unit_interval(eta_pre), "eta_pre must lie in (0, 1]");
  require(in_unit_interval(eta_post), "eta_post must lie in (0, 1]");
  require(in_unit_interval(detector_eta), "detector_eta must lie in (0, 1]");
  require(dark_prob >= 0.0 && dark_prob < 1.0, "dark_prob must lie in [0, 1)");
  require(std::isfinite(psa_gain_db) && psa_gain_db >= 0.0, "psa_gain_db must be >= 0");
  require(std::isfinite(added_loss_db) && added_loss_db >= 0.0, "added_loss_db must be >= 0");
  require(std::isfinite(filter_fwhm_hz) && filter_fwhm_hz > 0.0, "filter_fwhm_hz must be > 0");
  require(std::isfinite(jitter_fwhm_s) && jitter_fwhm_s >= 0.0, "jitter_fwhm_s must be >= 0");
  require(!phases_rad.empty(), "phases_rad must not be empty");
  for (double p : phases_rad) require(std::isfinite(p), "phases_rad entries must be finite");
  require(n_samples >= phases_rad.size(), "n_samples must cover every phase at least once");
}

SqueezeSpec ExperimentConfig::squeeze() const {
  return pump_power_mw ? SqueezeSpec::from_pump(*pump_power_mw, coupling) : SqueezeSpec::from_r(*r);
}

double ExperimentConfig::jitter_sigma_s() const {
  return jitter_fwhm_s / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
}

DetectionChain ExperimentConfig::physical_chain() const {
  return DetectionChain{eta_pre, PsaModel{psa_gain_db}, eta_post * db_to_efficiency(added_loss_db)};
}

DetectionChain ExperimentConfig::nominal_chain() const {
  return DetectionChain{eta_pre, PsaModel{psa_gain_db}, eta_post};
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["cutoff"] = cutoff;
  j["pump_power_mw"] = pump_power_mw ? json(*pump_power_mw) : json(nullptr);
  j["coupling"] = coupling;
  j["r"] = r ? json(*r) : json(nullptr);
  j["tap_reflectance"] = tap_reflectance;
  j["eta_pre"] = eta_pre;
  j["eta_post"] = eta_post;
  j["psa_gain_db"] = psa_gain_db;
  j["added_loss_db"] = added_loss_db;
  j["filter_fwhm_hz"] = filter_fwhm_hz;
  j["jitter_fwhm_s"] = jitter_fwhm_s;
  j["detector_eta"] = detector_eta;
  j["dark_prob"] = dark_prob;
  j["phases_rad"] = phases_rad;
  j["n_samples"] = n_samples;
  j["seed"] = seed;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  require(j.is_object(), "config must be a JSON object");
  for (const auto& item : j.items())
    require(known_keys().count(item.key()) == 1, "unknown config key '" + item.key() + "'");

  ExperimentConfig c;
  auto optional_number = [&](const char* key, std::optional<double>& target) {
    if (!j.contains(key)) return;
    target = j[key].is_null() ? std::nullopt : std::optional<double>(get_field<double>(j, key));
  };
  const bool has_r = j.contains("r") && !j["r"].is_null();
  const bool has_pump = j.contains("pump_power_mw") && !j["pump_power_mw"].is_null();
  require(!(has_r && has_pump), "pump_power_mw and r are mutually exclusive");
  if (has_r) c.pump_power_mw.reset();
  optional_number("pump_power_mw", c.pump_power_mw);
  optional_number("r", c.r);

  if (j.contains("cutoff")) c.cutoff = get_field<int>(j, "cutoff");
  if (j.contains("coupling")) c.coupling = get_field<double>(j, "coupling");
  if (j.contains("tap_reflectance")) c.tap_reflectance = get_field<double>(j, "tap_reflectance");
  if (j.contains("eta_pre")) c.eta_pre = get_field<double>(j, "eta_pre");
  if (j.contains("eta_post")) c.eta_post = get_field<double>(j, "eta_post");
  if (j.contains("psa_gain_db")) c.psa_gain_db = get_field<double>(j, "psa_gain_db");
  if (j.contains("added_loss_db")) c.added_loss_db = get_field<double>(j, "added_loss_db");
  if (j.contains("filter_fwhm_hz")) c.filter_fwhm_hz = get_field<double>(j, "filter_fwhm_hz");
  if (j.contains("jitter_fwhm_s")) c.jitter_fwhm_s = get_field<double>(j, "jitter_fwhm_s");
  if (j.contains("detector_eta")) c.detector_eta = get_field<double>(j, "detector_eta");
  if (j.contains("dark_prob")) c.dark_prob = get_field<double>(j, "dark_prob");
  if (j.contains("phases_rad")) c.phases_rad = get_field<std::vector<double>>(j, "phases_rad");
  if (j.contains("n_samples")) c.n_samples = get_field<std::size_t>(j, "n_samples");
  if (j.contains("seed")) c.seed = get_field<std::uint64_t>(j, "seed");
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

std::string ExperimentConfig::hash() const { return sha256_hex(to_json()); }

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), digest);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * SHA256_DIGEST_LENGTH);
  for (unsigned char b : digest) {
    out.push_back(hex[b >> 4]);
    out.push_back(hex[b & 0xf]);
  }
  return out;
}

}  // namespace cvtomo
