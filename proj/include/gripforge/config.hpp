#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "gripforge/errors.hpp"
#include "gripforge/objective.hpp"
#include "gripforge/refiner.hpp"

namespace gripforge {

/// Flat INI document: section -> key -> value. Lines are `key = value`,
/// sections `[name]`, comments start with '#' or ';'.
using IniDocument = std::map<std::string, std::map<std::string, std::string>>;

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

inline IniDocument parse_ini(std::istream& in) {
  IniDocument doc;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw ParseError("config line " + std::to_string(lineno) +
                         ": unterminated section header");
      }
      section = detail::trim(t.substr(1, t.size() - 2));
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(lineno) +
                       ": expected key = value");
    }
    std::string key = detail::trim(t.substr(0, eq));
    std::string value = detail::trim(t.substr(eq + 1));
    if (key.empty()) {
      throw ParseError("config line " + std::to_string(lineno) + ": empty key");
    }
    doc[section][key] = value;
  }
  return doc;
}

inline IniDocument load_ini(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  return parse_ini(in);
}

inline double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad numeric value for " + what + ": '" + s + "'");
  }
}

/// Applies one `key = value` pair to the loss weights; key names match the
/// CLI's --weight flags.
inline void apply_weight(LossWeights& w, const std::string& key,
                         const std::string& value) {
  double v = parse_number(value, "weight " + key);
  if (key == "op") w.op = v;
  else if (key == "eta") w.eta = v;
  else if (key == "ov_lin") w.ov_lin = v;
  else if (key == "ov_ang") w.ov_ang = v;
  else if (key == "hj") w.hj = v;
  else if (key == "w_tip") w.w_tip = v;
  else if (key == "ct") w.ct = v;
  else if (key == "hc") w.hc = v;
  else if (key == "hv_lin") w.hv_lin = v;
  else if (key == "hv_ang") w.hv_ang = v;
  else throw ParseError("unknown weight '" + key + "'");
}

/// Fills a refinement config from the `[weights]` and `[refine]` sections.
inline void apply_config(RefinementConfig& cfg, const IniDocument& doc) {
  auto weights = doc.find("weights");
  if (weights != doc.end()) {
    for (const auto& [k, v] : weights->second) apply_weight(cfg.weights, k, v);
  }
  auto refine = doc.find("refine");
  if (refine != doc.end()) {
    for (const auto& [k, v] : refine->second) {
      if (k == "interval") cfg.keyframe_interval = static_cast<int>(parse_number(v, k));
      else if (k == "generations") cfg.generations = static_cast<int>(parse_number(v, k));
      else if (k == "sigma_coeffs") cfg.sigma_coeffs = parse_number(v, k);
      else if (k == "sigma_wrist_rot") cfg.sigma_wrist_rot = parse_number(v, k);
      else if (k == "sigma_wrist_trans") cfg.sigma_wrist_trans = parse_number(v, k);
      else if (k == "skip_initial_frames") cfg.skip_initial_frames = static_cast<int>(parse_number(v, k));
      else if (k == "seed") cfg.seed = static_cast<std::uint64_t>(parse_number(v, k));
      else if (k == "jobs") cfg.jobs = static_cast<int>(parse_number(v, k));
      else if (k == "stagnation_generations") cfg.stagnation_generations = static_cast<int>(parse_number(v, k));
      else if (k == "contact_threshold") cfg.contact_threshold = parse_number(v, k);
      else if (k == "coeff_bound") cfg.coeff_bound = parse_number(v, k);
      else throw ParseError("unknown [refine] key '" + k + "'");
    }
  }
}

}  // namespace gripforge
