#include "recipcal/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace recipcal {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("config: cannot parse value '" + text + "' for key '" + key + "'");
  }
  return value;
}

using Setter = std::function<void(SystemConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"num_aps", [](auto& c, auto& k, auto& v) { c.num_aps = parse_number<int>(k, v); }},
      {"num_users", [](auto& c, auto& k, auto& v) { c.num_users = parse_number<int>(k, v); }},
      {"antennas_ap", [](auto& c, auto& k, auto& v) { c.antennas_ap = parse_number<int>(k, v); }},
      {"digital_chains_ap",
       [](auto& c, auto& k, auto& v) { c.digital_chains_ap = parse_number<int>(k, v); }},
      {"antennas_mu", [](auto& c, auto& k, auto& v) { c.antennas_mu = parse_number<int>(k, v); }},
      {"digital_chains_mu",
       [](auto& c, auto& k, auto& v) { c.digital_chains_mu = parse_number<int>(k, v); }},
      {"num_paths", [](auto& c, auto& k, auto& v) { c.num_paths = parse_number<int>(k, v); }},
      {"mismatch_sigma_mag",
       [](auto& c, auto& k, auto& v) { c.mismatch_sigma_mag = parse_number<double>(k, v); }},
      {"mismatch_sigma_phase",
       [](auto& c, auto& k, auto& v) { c.mismatch_sigma_phase = parse_number<double>(k, v); }},
      {"noise_variance",
       [](auto& c, auto& k, auto& v) { c.noise_variance = parse_number<double>(k, v); }},
      {"tx_power", [](auto& c, auto& k, auto& v) { c.tx_power = parse_number<double>(k, v); }},
      {"master_seed",
       [](auto& c, auto& k, auto& v) { c.master_seed = parse_number<std::uint64_t>(k, v); }},
      {"num_trials", [](auto& c, auto& k, auto& v) { c.num_trials = parse_number<int>(k, v); }},
  };
  return table;
}

}  // namespace

SystemConfig parse_config(std::istream& in) {
  SystemConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    it->second(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

SystemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

std::string format_config(const SystemConfig& cfg) {
  auto real = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "num_aps = " << cfg.num_aps << '\n'
     << "num_users = " << cfg.num_users << '\n'
     << "antennas_ap = " << cfg.antennas_ap << '\n'
     << "digital_chains_ap = " << cfg.digital_chains_ap << '\n'
     << "antennas_mu = " << cfg.antennas_mu << '\n'
     << "digital_chains_mu = " << cfg.digital_chains_mu << '\n'
     << "num_paths = " << cfg.num_paths << '\n'
     << "mismatch_sigma_mag = " << real(cfg.mismatch_sigma_mag) << '\n'
     << "mismatch_sigma_phase = " << real(cfg.mismatch_sigma_phase) << '\n'
     << "noise_variance = " << real(cfg.noise_variance) << '\n'
     << "tx_power = " << real(cfg.tx_power) << '\n'
     << "master_seed = " << cfg.master_seed << '\n'
     << "num_trials = " << cfg.num_trials << '\n';
  return os.str();
}

}  // namespace recipcal
