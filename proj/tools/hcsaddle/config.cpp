#include "config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace hcstool {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size()) throw ConfigError(key + ": '" + text + "' is not a number");
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size()) throw ConfigError(key + ": '" + text + "' is not an integer");
  return v;
}

std::string join_numbers(const std::vector<double>& values) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    out += (i ? "," : "") + std::string(buf);
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, std::string>) {
      out += values[i];
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::set<std::string> kKeys = {"methods",       "M",           "k",          "layouts",     "removal_fraction",
                                     "eps_mode",      "eps",         "eps_upper",  "delta",       "seeds",
                                     "max_iterations", "ha",         "pu_ha",      "inner_base",  "inner_steps",
                                     "spectrum_tolerance", "corrupt_q", "matrices"};

bool multigrid_ok(int cells) {
  while (cells % 2 == 0 && cells / 2 >= 2) cells /= 2;
  return (cells - 1) * (cells - 1) <= 2500;
}

}  // namespace

RawConfig parse_config_text(const std::string& text) {
  RawConfig raw;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (kKeys.count(key) == 0) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (raw.count(key) != 0) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    raw[key] = trim(line.substr(eq + 1));
  }
  return raw;
}

RawConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int32_t method_code(const std::string& name) {
  if (name == "PU") return HCS_METHOD_PU;
  if (name == "PL") return HCS_METHOD_PL;
  if (name == "PCG-K" || name == "PCG") return HCS_METHOD_PCG_K;
  throw ConfigError("unknown method '" + name + "' (PU, PL, PCG-K)");
}

int32_t ha_code(const std::string& name) {
  if (name == "exact") return HCS_HA_EXACT;
  if (name == "inner-cg") return HCS_HA_INNER_CG;
  if (name == "diagonal") return HCS_HA_DIAGONAL;
  if (name == "sgs") return HCS_HA_SGS;
  if (name == "mg") return HCS_HA_MULTIGRID;
  throw ConfigError("unknown H_A variant '" + name + "' (exact, inner-cg, diagonal, sgs, mg)");
}

int32_t layout_code(const std::string& name) {
  if (name == "periodic") return HCS_LAYOUT_PERIODIC;
  if (name == "random") return HCS_LAYOUT_RANDOM;
  throw ConfigError("unknown layout '" + name + "' (periodic, random)");
}

int removal_count(int cells, int inclusion_cells, double fraction) {
  const int per_side = cells / (2 * inclusion_cells);
  return static_cast<int>(fraction * per_side * per_side);
}

std::string ExperimentConfig::canonical() const {
  std::string out;
  const auto add = [&](const std::string& key, const std::string& value) { out += key + " = " + value + "\n"; };
  add("M", join(cells));
  add("corrupt_q", number(corrupt_q));
  add("delta", join_numbers(deltas));
  add("eps", join_numbers(eps_values));
  add("eps_mode", eps_mode);
  add("eps_upper", number(eps_upper));
  add("ha", ha);
  add("inner_base", inner_base);
  add("inner_steps", std::to_string(inner_steps));
  add("k", join(inclusion_cells));
  add("layouts", join(layouts));
  add("matrices", join(matrices));
  add("max_iterations", std::to_string(max_iterations));
  add("methods", join(methods));
  add("pu_ha", pu_ha);
  add("removal_fraction", number(removal_fraction));
  add("seeds", join(seeds));
  add("spectrum_tolerance", number(spectrum_tolerance));
  return out;
}

ExperimentConfig make_experiment_config(const RawConfig& raw) {
  ExperimentConfig c;
  const auto get = [&](const char* key) -> const std::string* {
    const auto it = raw.find(key);
    return it == raw.end() ? nullptr : &it->second;
  };
  if (const auto* v = get("methods")) c.methods = split_list(*v);
  if (const auto* v = get("M")) {
    c.cells.clear();
    for (const auto& s : split_list(*v)) c.cells.push_back(static_cast<int>(to_integer("M", s)));
  }
  if (const auto* v = get("k")) {
    c.inclusion_cells.clear();
    for (const auto& s : split_list(*v)) c.inclusion_cells.push_back(static_cast<int>(to_integer("k", s)));
  }
  if (const auto* v = get("layouts")) c.layouts = split_list(*v);
  if (const auto* v = get("removal_fraction")) c.removal_fraction = to_double("removal_fraction", *v);
  if (const auto* v = get("eps_mode")) c.eps_mode = *v;
  if (const auto* v = get("eps")) {
    c.eps_values.clear();
    for (const auto& s : split_list(*v)) c.eps_values.push_back(to_double("eps", s));
  }
  if (const auto* v = get("eps_upper")) c.eps_upper = to_double("eps_upper", *v);
  if (const auto* v = get("delta")) {
    c.deltas.clear();
    for (const auto& s : split_list(*v)) c.deltas.push_back(to_double("delta", s));
  }
  if (const auto* v = get("seeds")) {
    c.seeds.clear();
    for (const auto& s : split_list(*v)) {
      const long long seed = to_integer("seeds", s);
      if (seed < 0) throw ConfigError("seeds: negative seed " + s);
      c.seeds.push_back(static_cast<std::uint64_t>(seed));
    }
  }
  if (const auto* v = get("max_iterations")) c.max_iterations = static_cast<int>(to_integer("max_iterations", *v));
  if (const auto* v = get("ha")) c.ha = *v;
  if (const auto* v = get("pu_ha")) c.pu_ha = *v;
  if (const auto* v = get("inner_base")) c.inner_base = *v;
  if (const auto* v = get("inner_steps")) c.inner_steps = static_cast<int>(to_integer("inner_steps", *v));
  if (const auto* v = get("spectrum_tolerance")) c.spectrum_tolerance = to_double("spectrum_tolerance", *v);
  if (const auto* v = get("corrupt_q")) c.corrupt_q = to_double("corrupt_q", *v);
  if (const auto* v = get("matrices")) c.matrices = split_list(*v);

  for (const auto& m : c.methods) (void)method_code(m);
  for (const auto& l : c.layouts) (void)layout_code(l);
  (void)ha_code(c.ha);
  if (!c.pu_ha.empty()) (void)ha_code(c.pu_ha);
  if (ha_code(c.inner_base) == HCS_HA_INNER_CG) throw ConfigError("inner_base: inner-cg cannot be its own base");
  if (c.eps_mode != "uniform" && c.eps_mode != "random") throw ConfigError("eps_mode: expected uniform or random");
  if (c.inner_steps < 1) throw ConfigError("inner_steps must be positive");
  if (c.max_iterations < 1) throw ConfigError("max_iterations must be positive");
  if (!(c.removal_fraction >= 0.0 && c.removal_fraction < 1.0)) throw ConfigError("removal_fraction must lie in [0, 1)");
  if (!(c.spectrum_tolerance > 0.0)) throw ConfigError("spectrum_tolerance must be positive");
  if (!(c.eps_upper > 0.0 && c.eps_upper <= 1.0)) throw ConfigError("eps_upper must lie in (0, 1]");
  for (double d : c.deltas) {
    if (!(d > 0.0 && d < 1.0)) throw ConfigError("delta " + number(d) + " outside (0, 1)");
  }
  for (double e : c.eps_values) {
    if (!(e > 0.0 && e <= 1.0)) throw ConfigError("eps " + number(e) + " outside (0, 1]");
    if (c.eps_mode == "random" && e > c.eps_upper) {
      throw ConfigError("eps " + number(e) + " exceeds eps_upper " + number(c.eps_upper));
    }
  }
  const std::set<std::string> known_matrices = {"A", "A_sigma", "B_D", "M", "Q", "saddle"};
  for (const auto& m : c.matrices) {
    if (known_matrices.count(m) == 0) throw ConfigError("unknown matrix '" + m + "' (A, A_sigma, B_D, M, Q, saddle)");
  }
  const bool uses_mg = c.ha == "mg" || c.pu_ha == "mg" || c.inner_base == "mg";
  for (int M : c.cells) {
    if (M < 2) throw ConfigError("M = " + std::to_string(M) + ": need at least 2 cells per side");
    if (uses_mg && !multigrid_ok(M)) throw ConfigError("M = " + std::to_string(M) + " has too large a coarsest grid for mg");
    for (int k : c.inclusion_cells) {
      const std::string where = "M = " + std::to_string(M) + ", k = " + std::to_string(k);
      if (k < 2 || k % 2 != 0) throw ConfigError(where + ": inclusion size k must be even and >= 2");
      if (M % (2 * k) != 0) throw ConfigError(where + ": M must be divisible by 2k");
      const int lattice = (M / (2 * k)) * (M / (2 * k));
      for (const auto& l : c.layouts) {
        if (l == "random" && removal_count(M, k, c.removal_fraction) >= lattice) {
          throw ConfigError(where + ": removal would empty the lattice");
        }
      }
    }
  }
  return c;
}

}  // namespace hcstool
