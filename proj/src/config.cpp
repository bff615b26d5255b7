#include "moncrief/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "moncrief/errors.hpp"

namespace moncrief {

namespace {

using nlohmann::json;

template <typename T>
void read(const json& j, const char* section, const char* key, T& out) {
  if (!j.contains(section) || !j[section].contains(key)) return;
  try {
    out = j[section][key].get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for ") + section + "." + key);
  }
}

// INI text converted to the type the default config uses for that key
json typed_value(const json& like, const std::string& text, const std::string& key) {
  try {
    if (like.is_boolean()) {
      if (text == "true" || text == "1" || text == "yes") return true;
      if (text == "false" || text == "0" || text == "no") return false;
      throw ConfigError("expected a boolean for " + key);
    }
    if (like.is_number_unsigned()) {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(text, &pos);
      if (pos != text.size()) throw ConfigError("expected an integer for " + key);
      return v;
    }
    if (like.is_number_integer()) {
      std::size_t pos = 0;
      const long long v = std::stoll(text, &pos);
      if (pos != text.size()) throw ConfigError("expected an integer for " + key);
      return v;
    }
    if (like.is_number()) {
      std::size_t pos = 0;
      const double v = std::stod(text, &pos);
      if (pos != text.size()) throw ConfigError("expected a number for " + key);
      return v;
    }
    if (like.is_array()) return parse_list(text, key);
  } catch (const std::invalid_argument&) {
    throw ConfigError("cannot parse " + key + " = " + text);
  } catch (const std::out_of_range&) {
    throw ConfigError("value out of range for " + key);
  }
  return text;
}

std::array<double, 6> read_coefficient_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open coefficient file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  for (char& ch : text) {
    if (ch == ',' || ch == '\n' || ch == '\t' || ch == '\r') ch = ' ';
  }
  std::istringstream values(text);
  std::array<double, 6> c{};
  for (double& v : c) {
    if (!(values >> v)) throw ConfigError("coefficient file " + path + " needs six numbers");
  }
  double extra = 0;
  if (values >> extra) throw ConfigError("coefficient file " + path + " has more than six numbers");
  return c;
}

}  // namespace

std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    const std::string token = item.substr(b, e - b + 1);
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(token, &pos);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse list entry '" + token + "' for " + key);
    }
    if (pos != token.size()) throw ConfigError("cannot parse list entry '" + token + "' for " + key);
    out.push_back(v);
  }
  return out;
}

nlohmann::json to_json(const RunConfig& c) {
  json j;
  j["grid"] = {{"h", c.h}, {"word_budget", c.wordBudget}, {"L", c.L}};
  j["solver"] = {{"tol", c.tol}, {"max_iter", c.maxIter}, {"damping_floor", c.dampingFloor}};
  j["tt"] = {{"coefficients", c.coefficients}, {"coefficient_file", c.coefficientFile}, {"normalize", c.normalize}};
  j["continuation"] = {{"schedule", c.schedule}};
  j["geometry"] = {{"inj_rho", c.injRho}};
  j["mms"] = {{"radius", c.mmsRadius}, {"spacings", c.mmsSpacings}};
  j["roundtrip"] = {{"random_directions", c.randomDirections}, {"norm", c.roundTripNorm}, {"refine", c.roundTripRefine}};
  j["scan"] = {{"scales", c.scanScales}, {"rays", c.scanRays}};
  j["run"] = {{"out", c.outDir}, {"seed", c.seed}};
  return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be an object");
  const json schema = to_json(RunConfig{});
  for (const auto& [section, body] : j.items()) {
    if (!schema.contains(section)) throw ConfigError("unknown section " + section);
    if (!body.is_object()) throw ConfigError("section " + section + " must be an object");
    for (const auto& [key, value] : body.items()) {
      if (!schema[section].contains(key)) throw ConfigError("unknown key " + section + "." + key);
    }
  }
  RunConfig c;
  read(j, "grid", "h", c.h);
  read(j, "grid", "word_budget", c.wordBudget);
  read(j, "grid", "L", c.L);
  read(j, "solver", "tol", c.tol);
  read(j, "solver", "max_iter", c.maxIter);
  read(j, "solver", "damping_floor", c.dampingFloor);
  if (j.contains("tt") && j["tt"].contains("coefficients")) {
    const json& a = j["tt"]["coefficients"];
    if (!a.is_array() || a.size() != 6) throw ConfigError("tt.coefficients needs six numbers");
    for (int i = 0; i < 6; ++i) {
      if (!a[i].is_number()) throw ConfigError("tt.coefficients needs six numbers");
      c.coefficients[i] = a[i].get<double>();
    }
  }
  read(j, "tt", "coefficient_file", c.coefficientFile);
  read(j, "tt", "normalize", c.normalize);
  read(j, "continuation", "schedule", c.schedule);
  read(j, "geometry", "inj_rho", c.injRho);
  read(j, "mms", "radius", c.mmsRadius);
  read(j, "mms", "spacings", c.mmsSpacings);
  read(j, "roundtrip", "random_directions", c.randomDirections);
  read(j, "roundtrip", "norm", c.roundTripNorm);
  read(j, "roundtrip", "refine", c.roundTripRefine);
  read(j, "scan", "scales", c.scanScales);
  read(j, "scan", "rays", c.scanRays);
  read(j, "run", "out", c.outDir);
  read(j, "run", "seed", c.seed);
  return c;
}

RunConfig load_config(const std::string& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path);
  json j;
  if (std::filesystem::path(path).extension() == ".json") {
    std::ifstream in(path);
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("cannot parse " + path + ": " + e.what());
    }
  } else {
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::ini_parser::read_ini(path, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError("cannot parse " + path + ": " + e.what());
    }
    const json schema = to_json(RunConfig{});
    j = json::object();
    for (const auto& [section, body] : tree) {
      if (!schema.contains(section)) throw ConfigError("unknown section " + section + " in " + path);
      if (body.empty() && !body.data().empty()) throw ConfigError("key outside a section in " + path + ": " + section);
      j[section] = json::object();
      for (const auto& [key, value] : body) {
        const std::string name = section + "." + key;
        if (!schema[section].contains(key)) throw ConfigError("unknown key " + name + " in " + path);
        j[section][key] = typed_value(schema[section][key], value.data(), name);
      }
    }
  }
  RunConfig c = config_from_json(j);
  if (!c.coefficientFile.empty()) {
    std::filesystem::path file(c.coefficientFile);
    if (file.is_relative()) file = std::filesystem::path(path).parent_path() / file;
    c.coefficients = read_coefficient_file(file.string());
  }
  validate(c);
  return c;
}

void validate(const RunConfig& c) {
  const auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(c.h > 0 && std::isfinite(c.h), "grid.h must be positive");
  require(c.wordBudget >= 1, "grid.word_budget must be at least 1");
  require(c.L >= 0, "grid.L must be non-negative");
  require(c.tol > 0, "solver.tol must be positive");
  require(c.maxIter >= 1, "solver.max_iter must be at least 1");
  require(c.dampingFloor > 0 && c.dampingFloor <= 1, "solver.damping_floor must lie in (0, 1]");
  for (double v : c.coefficients) require(std::isfinite(v), "tt.coefficients must be finite");
  require(!c.schedule.empty(), "continuation.schedule is empty");
  for (std::size_t i = 0; i < c.schedule.size(); ++i) {
    require(c.schedule[i] > 0, "continuation.schedule entries must be positive");
    if (i > 0) require(c.schedule[i] > c.schedule[i - 1], "continuation.schedule must be strictly ascending");
  }
  require(c.injRho >= 0, "geometry.inj_rho must be non-negative");
  require(c.mmsRadius > 0 && c.mmsRadius < 0.9, "mms.radius must lie in (0, 0.9)");
  require(!c.mmsSpacings.empty(), "mms.spacings is empty");
  for (double s : c.mmsSpacings) require(s > 0 && s < c.mmsRadius, "mms.spacings must lie in (0, radius)");
  require(c.randomDirections >= 0, "roundtrip.random_directions must be non-negative");
  require(c.roundTripNorm > 0, "roundtrip.norm must be positive");
  require(!c.scanScales.empty(), "scan.scales is empty");
  for (std::size_t i = 0; i < c.scanScales.size(); ++i) {
    require(c.scanScales[i] > 0, "scan.scales entries must be positive");
    if (i > 0) require(c.scanScales[i] > c.scanScales[i - 1], "scan.scales must be strictly ascending");
  }
  require(c.scanRays >= 1, "scan.rays must be at least 1");
}

std::string config_hash(const RunConfig& c) {
  const std::string text = to_json(c).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace moncrief
