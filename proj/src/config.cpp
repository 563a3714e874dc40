#include "freqadv/config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <sstream>

#include "freqadv/errors.hpp"
#include "freqadv/io.hpp"

namespace freqadv {

namespace {

const std::set<std::string>& static_keys() {
  static const std::set<std::string> keys = {
      "dataset.format",
      "dataset.seed",
      "dataset.train_count",
      "dataset.test_count",
      "dataset.side",
      "dataset.channels",
      "dataset.classes",
      "dataset.images",
      "dataset.labels",
      "dataset.test_images",
      "dataset.test_labels",
      "dataset.export_idx",
      "model.arch",
      "model.width",
      "model.seed",
      "train.mode",
      "train.epochs",
      "train.batch_size",
      "train.learning_rate",
      "train.adv_epsilon",
      "train.adv_iterations",
      "train.adv_step_size",
      "attack.source",
      "attack.method",
      "attack.epsilon",
      "attack.iterations",
      "attack.step_size",
      "attack.momentum",
      "attack.mode",
      "attack.target_rule",
      "attack.constraint",
      "attack.n",
      "attack.sigma",
      "attack.mask_seed",
      "attack.count",
      "eval.count",
      "eval.master_seed",
      "matrix.sources",
      "matrix.targets",
      "matrix.baseline_target",
      "sweep.source",
      "sweep.target",
      "sweep.n_values",
      "output.dir",
      "threads",
  };
  return keys;
}

const std::set<std::string>& target_params() {
  static const std::set<std::string> params = {
      "base",   "preprocessor", "window",  "scale_lo",
      "shear",  "shift",        "zoom_lo", "zoom_hi",
      "rotation"};
  return params;
}

bool valid_id(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

bool is_known_config_key(const std::string& key) {
  if (static_keys().count(key)) return true;
  const auto parts = split(key, '.');
  if (parts.size() == 3 && parts[0] == "model" && valid_id(parts[1]) &&
      parts[2] == "checkpoint") {
    return true;
  }
  if (parts.size() == 3 && parts[0] == "target" && valid_id(parts[1]) &&
      target_params().count(parts[2])) {
    return true;
  }
  return false;
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw config_error("config line " + std::to_string(lineno) +
                         ": expected `key = value`");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (!is_known_config_key(key)) {
      throw config_error("config line " + std::to_string(lineno) +
                         ": unknown key `" + key + "`");
    }
    if (cfg.map_.count(key)) {
      throw config_error("config line " + std::to_string(lineno) +
                         ": duplicate key `" + key + "`");
    }
    cfg.map_[key] = value;
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  return parse_text(read_text_file(path));
}

std::string ExperimentConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : map_) {
    out += k;
    out += " = ";
    out += v;
    out += "\n";
  }
  return out;
}

std::string ExperimentConfig::digest() const {
  return hex_digest(fnv1a64(serialize()));
}

bool ExperimentConfig::has(const std::string& key) const {
  return map_.count(key) != 0;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (!is_known_config_key(key)) {
    throw config_error("unknown config key `" + key + "`");
  }
  map_[key] = value;
}

std::string ExperimentConfig::get_string(const std::string& key,
                                         const std::string& fallback) const {
  const auto it = map_.find(key);
  return it == map_.end() ? fallback : it->second;
}

std::string ExperimentConfig::require_string(const std::string& key) const {
  const auto it = map_.find(key);
  if (it == map_.end() || it->second.empty()) {
    throw config_error("missing required config key `" + key + "`");
  }
  return it->second;
}

int ExperimentConfig::get_int(const std::string& key, int fallback) const {
  const auto it = map_.find(key);
  if (it == map_.end()) return fallback;
  try {
    std::size_t used = 0;
    const int v = std::stoi(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw config_error("config key `" + key + "`: not an integer: " + it->second);
  }
}

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
  const auto it = map_.find(key);
  if (it == map_.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw config_error("config key `" + key + "`: not a number: " + it->second);
  }
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key,
                                        std::uint64_t fallback) const {
  const auto it = map_.find(key);
  if (it == map_.end()) return fallback;
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw config_error("config key `" + key + "`: not an unsigned integer: " +
                       it->second);
  }
}

bool ExperimentConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = map_.find(key);
  if (it == map_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw config_error("config key `" + key + "`: expected true/false");
}

std::vector<std::string> ExperimentConfig::get_list(const std::string& key) const {
  const auto it = map_.find(key);
  if (it == map_.end()) return {};
  std::vector<std::string> out;
  for (const std::string& part : split(it->second, ',')) {
    const std::string t = trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::vector<std::string> ExperimentConfig::ids_under(
    const std::string& prefix) const {
  std::vector<std::string> ids;
  const std::string want = prefix + ".";
  for (const auto& [k, v] : map_) {
    if (k.rfind(want, 0) != 0) continue;
    const auto parts = split(k, '.');
    if (parts.size() == 3 && std::find(ids.begin(), ids.end(), parts[1]) ==
                                 ids.end()) {
      ids.push_back(parts[1]);
    }
  }
  return ids;
}

}  // namespace freqadv
