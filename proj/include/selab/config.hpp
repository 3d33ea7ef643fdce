#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "selab/errors.hpp"
#include "selab/mesh.hpp"
#include "selab/numerics.hpp"
#include "selab/problem.hpp"

namespace selab {

/// Flat sectioned key-value config text: `[section]` headers, `key = value`
/// lines, `#` comments. Unknown keys are rejected at validation time.
class ConfigMap {
 public:
  static ConfigMap parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  static ConfigMap parse(const std::string& text, const std::string& origin = "<string>") {
    ConfigMap cfg;
    std::string section;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
        section = trim(line.substr(1, line.size() - 2));
        if (section.empty())
          throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside any section");
      cfg.values_[section + "." + key] = value;
    }
    return cfg;
  }

  /// Command-line override `section.key=value`.
  void apply_override(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw ConfigError("override must be section.key=value: " + spec);
    const std::string path = trim(spec.substr(0, eq));
    if (path.find('.') == std::string::npos)
      throw ConfigError("override key must be section.key: " + spec);
    values_[path] = trim(spec.substr(eq + 1));
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key: " + key);
    mark_used(key);
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : (mark_used(key), fallback);
  }

  double get_double(const std::string& key) const { return to_double(key, get_string(key)); }
  double get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : (mark_used(key), fallback);
  }

  long get_long(const std::string& key) const {
    const auto s = get_string(key);
    try {
      std::size_t pos = 0;
      const long v = std::stol(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + " is not an integer: " + s);
    }
  }
  long get_long(const std::string& key, long fallback) const {
    return has(key) ? get_long(key) : (mark_used(key), fallback);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) {
      mark_used(key);
      return fallback;
    }
    const auto s = get_string(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("config key " + key + " is not a boolean: " + s);
  }

  /// Comma-separated list of reals.
  std::vector<double> get_list(const std::string& key) const {
    const auto s = get_string(key);
    std::vector<double> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      tok = trim(tok);
      if (tok.empty()) continue;
      out.push_back(to_double(key, tok));
    }
    return out;
  }

  /// Grid spec: either `key = v1,v2,...` or `key.min/.max/.count[/.scale]`.
  std::vector<double> get_grid(const std::string& key) const {
    if (has(key)) return get_list(key);
    const double lo = get_double(key + ".min");
    const double hi = get_double(key + ".max");
    const long n = get_long(key + ".count");
    const std::string scale = get_string(key + ".scale", "linear");
    if (n < 1) throw ConfigError("grid " + key + " needs count >= 1");
    if (scale == "log") return logspace(lo, hi, static_cast<std::size_t>(n));
    if (scale == "linear") return linspace(lo, hi, static_cast<std::size_t>(n));
    throw ConfigError("grid " + key + ".scale must be linear or log");
  }

  /// Every key must have been consumed by a getter; leftovers are errors.
  void reject_unknown_keys() const {
    std::vector<std::string> unknown;
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) unknown.push_back(k);
    if (!unknown.empty()) {
      std::string msg = "unknown config keys:";
      for (const auto& k : unknown) msg += " " + k;
      throw ConfigError(msg);
    }
  }

  const std::map<std::string, std::string>& raw() const { return values_; }

 private:
  static std::string trim(std::string s) {
    auto issp = [](unsigned char c) { return std::isspace(c); };
    while (!s.empty() && issp(s.front())) s.erase(s.begin());
    while (!s.empty() && issp(s.back())) s.pop_back();
    return s;
  }
  static double to_double(const std::string& key, const std::string& s) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + " is not a number: " + s);
    }
  }
  void mark_used(const std::string& key) const {
    used_.insert(key);
    used_.insert(key + ".min");
    used_.insert(key + ".max");
    used_.insert(key + ".count");
    used_.insert(key + ".scale");
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

inline GSpec parse_gspec(const ConfigMap& cfg) {
  const std::string form = cfg.get_string("problem.g.form", "none");
  if (form == "none") return GSpec::none();
  if (form == "power") return GSpec::power(cfg.get_double("problem.g.theta"));
  if (form == "power_plus_const")
    return GSpec::power_plus_constant(cfg.get_double("problem.g.theta"),
                                      cfg.get_double("problem.g.a_inf"));
  if (form == "log") return GSpec::log_singular();
  throw ConfigError("problem.g.form must be none|power|power_plus_const|log");
}

inline FSpec parse_fspec(const ConfigMap& cfg) {
  const std::string form = cfg.get_string("problem.f.form", "zero");
  if (form == "zero") return FSpec::zero();
  if (form == "one") return FSpec::one();
  if (form == "sublinear") return FSpec::sublinear(cfg.get_double("problem.f.p"));
  if (form == "linear") return FSpec::linear(cfg.get_double("problem.f.m"));
  if (form == "saturating") return FSpec::saturating(cfg.get_double("problem.f.m"));
  throw ConfigError("problem.f.form must be zero|one|sublinear|linear|saturating");
}

inline CoefficientSpec parse_coefficient(const ConfigMap& cfg, const std::string& name,
                                         double fallback) {
  const std::string key = "problem." + name;
  const std::string kind = cfg.get_string(key + ".kind", "constant");
  if (kind == "constant") return CoefficientSpec::constant(cfg.get_double(key + ".value", fallback));
  if (kind == "distance_power")
    return CoefficientSpec::distance_power(static_cast<int>(cfg.get_long(key + ".sign", 1)),
                                           cfg.get_double(key + ".beta"));
  throw ConfigError(key + ".kind must be constant|distance_power");
}

inline ProblemInstance parse_problem(const ConfigMap& cfg) {
  ProblemInstance p;
  const std::string fam = cfg.get_string("problem.family");
  if (fam == "plamu") p.family = Family::Plamu;
  else if (fam == "pla") p.family = Family::Pla;
  else if (fam == "convection") p.family = Family::Convection;
  else if (fam == "ppart") p.family = Family::Ppart;
  else if (fam == "weighted_convection") p.family = Family::WeightedConvection;
  else if (fam == "radial_shi") p.family = Family::RadialShi;
  else if (fam == "sublinear_two_param") p.family = Family::SublinearTwoParam;
  else throw ConfigError("unknown problem.family: " + fam);
  p.g = parse_gspec(cfg);
  p.f = parse_fspec(cfg);
  p.K = parse_coefficient(cfg, "K", 0.0);
  p.h = parse_coefficient(cfg, "h", 1.0);
  p.a = parse_coefficient(cfg, "a", 0.0);
  p.p_coef = parse_coefficient(cfg, "p", 1.0);
  p.q = parse_coefficient(cfg, "q", 1.0);
  p.lambda = cfg.get_double("problem.lambda", 0.0);
  p.mu = cfg.get_double("problem.mu", 0.0);
  p.p_grad = cfg.get_double("problem.p_grad", p.family == Family::Ppart ? 2.0 : 0.0);
  p.a_grad = cfg.get_double("problem.a_grad", 0.0);
  p.validate();
  return p;
}

struct MeshSpec {
  Geometry geometry = Geometry::interval();
  std::size_t n = 1001;
  double grading = 1.0;
};

inline MeshSpec parse_mesh(const ConfigMap& cfg) {
  MeshSpec m;
  const std::string geom = cfg.get_string("mesh.geometry", "interval");
  if (geom == "interval")
    m.geometry = Geometry::interval();
  else if (geom == "ball")
    m.geometry = Geometry::ball(static_cast<int>(cfg.get_long("mesh.dimension", 1)));
  else
    throw ConfigError("mesh.geometry must be interval|ball");
  m.n = static_cast<std::size_t>(cfg.get_long("mesh.n", 1001));
  m.grading = cfg.get_double("mesh.grading", 1.0);
  return m;
}

}  // namespace selab
