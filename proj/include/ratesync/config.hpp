#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ratesync/csv.hpp"
#include "ratesync/profiles.hpp"
#include "ratesync/sim.hpp"

namespace ratesync {

inline constexpr std::string_view kToolVersion = "ratesync 0.1.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat sectioned key=value text. Sections: [session], [channel], [qoe],
// [users], [run]. Keys mirror the config struct field names; unknown
// sections or keys are errors. '#' and ';' start comments. List values are
// comma separated.
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in) {
    ConfigFile file;
    std::string line;
    std::string section;
    int line_number = 0;
    while (std::getline(in, line)) {
      ++line_number;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::string trimmed = trim(line);
      if (trimmed.empty() || trimmed[0] == '#' || trimmed[0] == ';') continue;
      if (trimmed.front() == '[') {
        if (trimmed.back() != ']') {
          throw ConfigError("line " + std::to_string(line_number) + ": unterminated section");
        }
        section = trim(trimmed.substr(1, trimmed.size() - 2));
        if (section != "session" && section != "channel" && section != "qoe" &&
            section != "users" && section != "run") {
          throw ConfigError("line " + std::to_string(line_number) + ": unknown section [" +
                            section + "]");
        }
        continue;
      }
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("line " + std::to_string(line_number) + ": expected key = value");
      }
      if (section.empty()) {
        throw ConfigError("line " + std::to_string(line_number) + ": key outside any section");
      }
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty() || value.empty()) {
        throw ConfigError("line " + std::to_string(line_number) + ": empty key or value");
      }
      if (!file.values_.emplace(section + "." + key, value).second) {
        throw ConfigError("line " + std::to_string(line_number) + ": duplicate key " + key);
      }
    }
    return file;
  }

  static ConfigFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse(in);
  }

  bool has(const std::string& qualified) const { return values_.count(qualified) > 0; }

  const std::string& raw(const std::string& qualified) const {
    const auto it = values_.find(qualified);
    if (it == values_.end()) throw ConfigError("missing config key: " + qualified);
    consumed_.push_back(qualified);
    return it->second;
  }

  double number(const std::string& qualified) const {
    return parse_number(qualified, raw(qualified));
  }

  std::int64_t integer(const std::string& qualified) const {
    const double v = number(qualified);
    const auto i = static_cast<std::int64_t>(v);
    if (static_cast<double>(i) != v) throw ConfigError(qualified + ": expected an integer");
    return i;
  }

  std::vector<double> number_list(const std::string& qualified) const {
    const std::string& text = raw(qualified);
    std::vector<double> values;
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto comma = text.find(',', start);
      const std::string item =
          trim(comma == std::string::npos ? text.substr(start) : text.substr(start, comma - start));
      if (item.empty()) throw ConfigError(qualified + ": empty list element");
      values.push_back(parse_number(qualified, item));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return values;
  }

  // Every known key must be consumed by the resolver; anything left is a typo.
  void reject_unconsumed() const {
    for (const auto& [key, value] : values_) {
      if (std::find(consumed_.begin(), consumed_.end(), key) == consumed_.end()) {
        throw ConfigError("unknown config key: " + key);
      }
    }
  }

  // Canonical digest of the resolved key/value map (order independent).
  std::string digest() const {
    std::uint64_t hash = 0xcbf29ce484222325ULL;  // FNV-1a
    for (const auto& [key, value] : values_) {    // std::map iterates sorted
      for (const std::string* part : {&key, &value}) {
        for (char ch : *part) {
          hash ^= static_cast<unsigned char>(ch);
          hash *= 0x100000001b3ULL;
        }
        hash ^= '\n';
        hash *= 0x100000001b3ULL;
      }
    }
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
    return std::string(buffer);
  }

 private:
  static std::string trim(const std::string& text) {
    const auto first = text.find_first_not_of(" \t");
    if (first == std::string::npos) return "";
    const auto last = text.find_last_not_of(" \t");
    return text.substr(first, last - first + 1);
  }

  static double parse_number(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(text, &used);
    } catch (const std::exception&) {
      throw ConfigError(key + ": not a number: '" + text + "'");
    }
    if (used != text.size()) throw ConfigError(key + ": trailing junk in '" + text + "'");
    return value;
  }

  std::map<std::string, std::string> values_;
  mutable std::vector<std::string> consumed_;
};

/// A scenario file resolved against defaults, plus the optional fixed
/// per-user fields used by single-instance allocation.
struct ResolvedScenario {
  ScenarioConfig scenario;
  std::vector<double> fixed_gains;       // empty: sample from the seed
  std::vector<double> prior_delays;      // empty: zeros
  std::vector<double> budgets;           // [run] budgets, may be empty
  int trials = 50;
  bool has_budget = false;               // [session] per_user_budget present
  std::string profile_name;              // set when requested_sizes named a profile
  std::string digest;
};

inline ResolvedScenario resolve_scenario(const ConfigFile& file) {
  ResolvedScenario out;
  ScenarioConfig& sc = out.scenario;

  // [channel] -- defaults: 2 MHz bandwidth, unit power, unit cost rate,
  // normalized mean gain.
  if (file.has("channel.bandwidth_hz")) sc.session.channel.bandwidth_hz = file.number("channel.bandwidth_hz");
  if (file.has("channel.tx_power")) sc.session.channel.tx_power = file.number("channel.tx_power");
  if (file.has("channel.power_cost_rate")) sc.session.channel.power_cost_rate = file.number("channel.power_cost_rate");
  if (file.has("channel.mean_gain")) sc.session.channel.mean_gain = file.number("channel.mean_gain");

  // [session] -- defaults: G = 3 s, T = 10 s, a = 1.
  if (file.has("session.per_user_budget")) {
    sc.session.per_user_budget = file.number("session.per_user_budget");
    out.has_budget = true;
  }
  if (file.has("session.delay_bound")) sc.session.delay_bound = file.number("session.delay_bound");
  if (file.has("session.segment_duration")) sc.session.segment_duration = file.number("session.segment_duration");
  if (file.has("session.storage_cost_per_bit")) sc.session.storage_cost_per_bit = file.number("session.storage_cost_per_bit");

  // [users]
  sc.num_users = static_cast<int>(file.integer("users.num_users"));
  if (sc.num_users < 1) throw ConfigError("users.num_users: must be >= 1");
  const std::string& sizes_text = file.raw("users.requested_sizes");
  if (is_video_profile(sizes_text)) {
    out.profile_name = sizes_text;
    const VideoProfile& profile = video_profile(sizes_text);
    sc.requested_bits = {requested_bits(profile, sc.session.segment_duration)};
    sc.session.qoe = profile.model;
  } else {
    sc.requested_bits = file.number_list("users.requested_sizes");
  }
  if (file.has("users.gain_to_noise")) out.fixed_gains = file.number_list("users.gain_to_noise");
  if (file.has("users.prior_residual_delay")) {
    out.prior_delays = file.number_list("users.prior_residual_delay");
  }

  // [qoe] -- overrides any profile model; required when no profile is named.
  const bool has_qoe = file.has("qoe.alpha1") || file.has("qoe.alpha2") || file.has("qoe.alpha3");
  if (has_qoe) {
    QoEModel model = sc.session.qoe;
    if (file.has("qoe.alpha1")) model.alpha1 = file.number("qoe.alpha1");
    if (file.has("qoe.alpha2")) model.alpha2 = file.number("qoe.alpha2");
    if (file.has("qoe.alpha3")) model.alpha3 = file.number("qoe.alpha3");
    sc.session.qoe = model;
  }

  // [run] -- defaults: 30 segments, adaptive proposed scheme, seed 1.
  if (file.has("run.scheme")) sc.scheme = scheme_from_string(file.raw("run.scheme"));
  if (file.has("run.num_segments")) sc.num_segments = static_cast<int>(file.integer("run.num_segments"));
  if (file.has("run.seed")) sc.seed = static_cast<std::uint64_t>(file.integer("run.seed"));
  if (file.has("run.trials")) out.trials = static_cast<int>(file.integer("run.trials"));
  if (file.has("run.budgets")) out.budgets = file.number_list("run.budgets");
  if (file.has("run.discretize")) sc.ladder = file.number_list("run.discretize");

  file.reject_unconsumed();
  out.digest = file.digest();

  if (!has_qoe && out.profile_name.empty()) {
    throw ConfigError("missing [qoe] section (or a named video profile)");
  }
  const std::size_t n = static_cast<std::size_t>(sc.num_users);
  if (!out.fixed_gains.empty() && out.fixed_gains.size() != 1 && out.fixed_gains.size() != n) {
    throw ConfigError("users.gain_to_noise: need 1 or num_users entries");
  }
  if (!out.prior_delays.empty() && out.prior_delays.size() != 1 && out.prior_delays.size() != n) {
    throw ConfigError("users.prior_residual_delay: need 1 or num_users entries");
  }
  return out;
}

struct RunManifest {
  std::string command;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string_view tool_version = kToolVersion;

  std::string line() const {
    std::ostringstream out;
    out << "manifest command=" << command << " digest=" << config_digest << " seed=" << seed
        << " version=" << tool_version;
    return out.str();
  }
};

}  // namespace ratesync
