#include "toporel/config.hpp"

#include <sstream>

#include "toporel/fsutil.hpp"

namespace toporel {

namespace {

const std::vector<ConfigKeySpec> kKnownKeys = {
    {"seed", "1", "root seed; all randomness derives from it"},
    {"data.kind", "scaled_permutation",
     "paired-domain generator: scaled_permutation | orthogonal_mix | independent_noise"},
    {"data.classes", "2", "number of classes"},
    {"data.samples", "2000", "training samples per domain"},
    {"data.test_samples", "500", "test samples per domain"},
    {"data.dim", "32", "input dimensionality"},
    {"data.separation", "4.0", "distance scale between class means"},
    {"data.alpha", "1.0", "isotropic factor for orthogonal_mix"},
    {"data.noise_sigma", "0.1", "noise level for independent_noise"},
    {"data.dir", "", "load a generated pair from this directory instead of sampling"},
    {"train.mode", "relative_robust",
     "absolute | relative_vanilla | relative_robust"},
    {"train.domain", "a", "which domain the train command fits: a | b"},
    {"train.epochs", "15", "training epochs"},
    {"train.lr_encoder", "0.05", "top encoder layer learning rate"},
    {"train.lr_head", "0.1", "head learning rate"},
    {"train.layerwise_decay", "0.65", "per-layer decay of the encoder learning rate"},
    {"train.anchor_refresh_steps", "100", "re-encode anchors every this many steps"},
    {"train.sub_batch_n", "16", "samples per sub-batch (class and standard)"},
    {"train.hidden", "64", "comma-separated hidden widths of the encoder"},
    {"train.latent_dim", "16", "width of the latent layer"},
    {"train.anchor_count", "0", "anchors k; 0 means k = latent_dim"},
    {"train.activation", "gelu", "relu | gelu | sigmoid | identity"},
    {"topo.placement", "none", "densification placement: pre | post | combined | none"},
    {"topo.lambda1", "0.002", "pre-relative densification weight"},
    {"topo.lambda2", "0.018", "post-relative densification weight"},
    {"topo.beta", "3.0", "target death time"},
    {"topo.scheduler_period_steps", "0",
     "cyclic scheduler period in steps; 0 means one epoch"},
    {"stitch.runs", "5", "seeded repetitions per mode in the experiment grid"},
    {"stitch.modes", "absolute,relative_vanilla,relative_robust",
     "modes the experiment command sweeps"},
    {"stitch.f1", "macro", "F1 averaging: macro | micro"},
    {"stitch.eval_stats", "running",
     "robust-mode eval statistics: running | evalset"},
    {"stitch.encoder_dir", "", "stitch command: directory of the encoder-side model"},
    {"stitch.encoder_stem", "model", "stitch command: file stem of the encoder-side model"},
    {"stitch.head_dir", "", "stitch command: directory of the head-side model"},
    {"stitch.head_stem", "model", "stitch command: file stem of the head-side model"},
    {"stitch.eval_csv", "", "stitch command: dataset CSV to evaluate on"},
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  const auto b = s.find_last_not_of(" \t");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

}  // namespace

const std::vector<ConfigKeySpec>& Config::known_keys() { return kKnownKeys; }

Config::Config() {
  for (const auto& spec : kKnownKeys) values_[spec.key] = spec.default_value;
}

Config Config::load(const std::string& path) {
  Config config;
  config.apply_file(path);
  return config;
}

void Config::apply_file(const std::string& path) {
  std::istringstream ss(read_file(path));
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("'" + path + "' line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw ConfigError("unknown config key '" + key + "'");
  }
  it->second = value;
}

const std::string& Config::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

int Config::get_int(const std::string& key) const {
  const std::string& v = get_string(key);
  try {
    std::size_t pos = 0;
    const int value = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return value;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not an integer");
  }
}

std::int64_t Config::get_int64(const std::string& key) const {
  const std::string& v = get_string(key);
  try {
    std::size_t pos = 0;
    const std::int64_t value = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return value;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not an integer");
  }
}

double Config::get_double(const std::string& key) const {
  const std::string& v = get_string(key);
  try {
    std::size_t pos = 0;
    const double value = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return value;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
  }
}

std::vector<std::string> Config::get_string_list(const std::string& key) const {
  std::vector<std::string> out;
  std::istringstream ss(get_string(key));
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

std::vector<int> Config::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const auto& tok : get_string_list(key)) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': '" + tok + "' is not an integer");
    }
  }
  return out;
}

std::string Config::resolved_text() const {
  std::string out;
  for (const auto& [key, value] : values_) {
    out += key + " = " + value + "\n";
  }
  return out;
}

}  // namespace toporel
