#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace freqadv {

// Flat `key = value` experiment configuration. '#' starts a comment; keys
// are dotted lowercase words. Unknown keys are rejected at parse time.
// Values are kept verbatim, so serialize() round-trips losslessly; the
// canonical serialization (sorted keys) feeds the provenance digest.
class ExperimentConfig {
 public:
  static ExperimentConfig parse_text(const std::string& text);
  static ExperimentConfig parse_file(const std::string& path);

  std::string serialize() const;
  std::string digest() const;

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key,
                         const std::string& fallback = "") const;
  std::string require_string(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;

  // ids X appearing as prefix.X.suffix keys, in sorted order.
  std::vector<std::string> ids_under(const std::string& prefix) const;

  const std::map<std::string, std::string>& entries() const { return map_; }

  bool operator==(const ExperimentConfig& o) const { return map_ == o.map_; }

 private:
  std::map<std::string, std::string> map_;
};

// True when the key is a documented static key or matches a documented
// pattern (model.<id>.checkpoint, target.<id>.<param>).
bool is_known_config_key(const std::string& key);

}  // namespace freqadv
