#pragma once

// Flat key = value run configuration with dotted sections.
//
//   # comment
//   command = speed
//   model.D = 10
//   reaction.cos = 0.5
//   sweep.model.R = 5, 10, 20

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fieldroad/errors.hpp"
#include "fieldroad/grid.hpp"
#include "fieldroad/model.hpp"
#include "fieldroad/simulate.hpp"
#include "fieldroad/spectral.hpp"

namespace fieldroad {

enum class Command { Simulate, Steady, Eigen, Speed, Sweep, Verify, Front };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::Simulate: return "simulate";
    case Command::Steady: return "steady";
    case Command::Eigen: return "eigen";
    case Command::Speed: return "speed";
    case Command::Sweep: return "sweep";
    case Command::Verify: return "verify";
    case Command::Front: return "front";
  }
  return "?";
}

/// Shortest representation that round-trips: 17 significant digits.
inline std::string fmt17(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

struct KeySpec {
  const char* key;
  const char* fallback;
};

// Every admissible key with its default. An empty default means "derived".
inline const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      {"command", "eigen"},
      {"output_dir", "out"},
      {"threads", "1"},
      {"seed", "0"},
      {"model.D", "1"},
      {"model.d", "1"},
      {"model.mu", "1"},
      {"model.nu", "1"},
      {"model.L", "1"},
      {"model.R", "10"},
      {"reaction.family", "logistic"},
      {"reaction.mean", "1"},
      {"reaction.cos", ""},
      {"reaction.sin", ""},
      {"reaction.table", ""},
      {"grid.nx", "64"},
      {"grid.ny", "64"},
      {"grid.dy", ""},
      {"sim.dt", "0.05"},
      {"sim.T", "10"},
      {"sim.scheme", "imex"},
      {"sim.record_every", "10"},
      {"sim.record_from", "0"},
      {"sim.domain_copies", "1"},
      {"init.kind", "bump"},
      {"init.center", ""},
      {"init.width", "2"},
      {"init.amp_u", ""},
      {"init.amp_v", "1"},
      {"init.epsilon", "0.01"},
      {"spectral.alpha", "0"},
      {"spectral.alphas", ""},
      {"spectral.alpha_min", "0.1"},
      {"spectral.alpha_max", "3"},
      {"spectral.alpha_count", "0"},
      {"spectral.tol", "1e-10"},
      {"spectral.max_iterations", "20000"},
      {"spectral.halfplane", "false"},
      {"spectral.R0", "5"},
      {"spectral.R_max", "40"},
      {"spectral.growth", "2"},
      {"spectral.dy", "0.1"},
      {"spectral.tol_limit", "1e-6"},
      {"spectral.tol_alpha", "1e-4"},
      {"spectral.dump_operator", "false"},
      {"steady.tol", "1e-8"},
      {"front.level", ""},
      {"front.window_fraction", "0.5"},
      {"front.pulsating", "false"},
      {"verify.alphas", "0, 0.3, -0.3, 0.7, -0.7, 1.5"},
      {"verify.R_list", "5, 10"},
      {"verify.copies", "400"},
      {"verify.T", "80"},
      {"sweep.command", "eigen"},
      {"sweep.max_points", "10000"},
  };
  return table;
}

// Bare and descriptive spellings accepted on input; the manifest always uses the dotted key.
inline const std::map<std::string, std::string>& aliases() {
  static const std::map<std::string, std::string> a = {
      {"D", "model.D"},       {"d", "model.d"},         {"mu", "model.mu"},       {"nu", "model.nu"},
      {"L", "model.L"},       {"R", "model.R"},         {"nx", "grid.nx"},        {"ny", "grid.ny"},
      {"dy", "grid.dy"},      {"dt", "sim.dt"},         {"T", "sim.T"},           {"alpha", "spectral.alpha"},
      {"alphas", "spectral.alphas"}, {"tol", "spectral.tol"}, {"halfplane", "spectral.halfplane"},
  };
  return a;
}

// Descriptive names that users reach for; suggested, never accepted silently.
inline const std::map<std::string, std::string>& hints() {
  static const std::map<std::string, std::string> h = {
      {"diffusivity", "D"},      {"road_diffusivity", "D"}, {"field_diffusivity", "d"},
      {"width", "R"},            {"period", "L"},           {"twist", "alpha"},
      {"tolerance", "tol"},      {"timestep", "dt"},        {"output", "output_dir"},
  };
  return h;
}

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline std::string suggest(const std::string& key) {
  if (auto it = hints().find(key); it != hints().end()) return it->second;
  std::string best;
  std::size_t best_d = 3;
  auto consider = [&](const std::string& cand) {
    const std::size_t dist = edit_distance(key, cand);
    if (dist < best_d) best_d = dist, best = cand;
  };
  for (const auto& ks : key_table()) consider(ks.key);
  for (const auto& [alias, _] : aliases()) consider(alias);
  return best;
}

inline bool is_known(const std::string& key) {
  return std::any_of(key_table().begin(), key_table().end(), [&](const KeySpec& k) { return key == k.key; });
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Raw, validated-by-name settings. Values stay as text until resolve().
class Settings {
 public:
  Settings() {
    for (const auto& k : detail::key_table()) values_[k.key] = k.fallback;
  }

  /// Sets `key` (aliases accepted). `sweep.<key>` entries hold comma lists.
  void set(const std::string& raw_key, const std::string& value) {
    const std::string key = canonical(raw_key);
    if (key.rfind("sweep.", 0) == 0 && key != "sweep.command" && key != "sweep.max_points") {
      const std::string inner = canonical(key.substr(6));
      auto it = std::find_if(sweep_.begin(), sweep_.end(), [&](const auto& kv) { return kv.first == inner; });
      if (it == sweep_.end())
        sweep_.emplace_back(inner, detail::trim(value));
      else
        it->second = detail::trim(value);
      return;
    }
    values_[key] = detail::trim(value);
  }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(canonical(key));
    return it->second;
  }

  const std::map<std::string, std::string>& values() const { return values_; }
  const std::vector<std::pair<std::string, std::string>>& sweep() const { return sweep_; }

  /// Resolves aliases and rejects unknown keys with a suggestion.
  static std::string canonical(const std::string& raw) {
    const std::string key = detail::trim(raw);
    if (detail::is_known(key)) return key;
    if (auto it = detail::aliases().find(key); it != detail::aliases().end()) return it->second;
    if (key.rfind("sweep.", 0) == 0) {
      canonical(key.substr(6));
      return key;
    }
    std::string msg = "unknown key '" + key + "'";
    if (const auto s = detail::suggest(key); !s.empty()) msg += "; did you mean '" + s + "'?";
    throw ConfigError(msg);
  }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::pair<std::string, std::string>> sweep_;  ///< in order of first appearance
};

inline void parse_config_text(Settings& s, const std::string& text, const std::string& origin = "<config>") {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      std::ostringstream os;
      os << origin << ":" << lineno << ": expected key = value";
      throw ConfigError(os.str());
    }
    s.set(line.substr(0, eq), line.substr(eq + 1));
  }
}

inline void parse_config_file(Settings& s, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  parse_config_text(s, buf.str(), path);
}

/// "key=value" from the command line.
inline void apply_override(Settings& s, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  s.set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (trim(v.substr(pos)).empty()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + " must be a number (got '" + v + "')");
}

inline long to_long(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != std::floor(x) || std::abs(x) > 1e15) throw ConfigError(key + " must be an integer (got '" + v + "')");
  return static_cast<long>(x);
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + " must be true or false (got '" + v + "')");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(to_double(key, s));
  return out;
}

}  // namespace detail

struct InitSpec {
  std::string kind = "bump";  ///< bump | subsolution | zero | capacity
  double center = 0.0;
  double width = 2.0;
  double amp_u = 1.0;
  double amp_v = 1.0;
  double epsilon = 0.01;
};

struct SpectralConfig {
  std::vector<double> alphas;
  EigenOptions eigen;
  bool halfplane = false;
  GridPolicy policy;
  double tol_limit = 1e-6;
  double tol_alpha = 1e-4;
  bool dump_operator = false;
};

struct FrontConfig {
  double level = 0.1;
  double window_fraction = 0.5;
  bool pulsating = false;
};

struct VerifyConfig {
  std::vector<double> alphas;
  std::vector<double> R_list;
  std::size_t copies = 120;
  double T = 25.0;
};

/// Fully resolved configuration.
struct RunConfig {
  Settings settings;
  Command command = Command::Eigen;
  ModelParams model;
  std::optional<ReactionSpec> reaction;
  long nx = 64;
  long ny = 64;
  SimConfig sim;
  InitSpec init;
  SpectralConfig spectral;
  double steady_tol = 1e-8;
  FrontConfig front;
  VerifyConfig verify;
  std::string output_dir = "out";
  unsigned threads = 1;
  unsigned long long seed = 0;
  Command sweep_command = Command::Eigen;
  std::size_t sweep_max_points = 10000;

  const ReactionSpec& spec() const { return *reaction; }

  /// One-period grid at width model.R.
  StripGrid period_grid() const { return build_grid(model, nx, ny); }

  /// Grid on which simulate/front run: one period, or a reflecting window of
  /// sim.domain_copies periods.
  StripGrid run_grid() const {
    const auto g = period_grid();
    return sim.domain_copies > 1 ? tile_window(g, sim.domain_copies) : g;
  }
};

inline Command parse_command(const std::string& key, const std::string& v) {
  static const std::map<std::string, Command> m = {
      {"simulate", Command::Simulate}, {"steady", Command::Steady}, {"eigen", Command::Eigen},
      {"speed", Command::Speed},       {"sweep", Command::Sweep},   {"verify", Command::Verify},
      {"front", Command::Front},
  };
  auto it = m.find(v);
  if (it == m.end()) throw ConfigError(key + " must be one of simulate, steady, eigen, speed, sweep, verify, front (got '" + v + "')");
  return it->second;
}

/// Typed view of `s` with every invariant checked.
inline RunConfig resolve(const Settings& s) {
  using namespace detail;
  RunConfig c;
  c.settings = s;
  auto num = [&](const char* k) { return to_double(k, s.get(k)); };
  auto integer = [&](const char* k) { return to_long(k, s.get(k)); };
  auto flag = [&](const char* k) { return to_bool(k, s.get(k)); };
  auto positive = [&](const char* k) {
    const double x = num(k);
    if (!(x > 0.0)) {
      std::ostringstream os;
      os << k << " must be > 0 (got " << s.get(k) << ")";
      throw ConfigError(os.str());
    }
    return x;
  };

  c.command = parse_command("command", s.get("command"));
  c.output_dir = s.get("output_dir");
  if (c.output_dir.empty()) throw ConfigError("output_dir must not be empty");
  const long threads = integer("threads");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  c.threads = static_cast<unsigned>(threads);
  const long seed = integer("seed");
  if (seed < 0) throw ConfigError("seed must be >= 0");
  c.seed = static_cast<unsigned long long>(seed);

  c.model.D = num("model.D");
  c.model.d = num("model.d");
  c.model.mu = num("model.mu");
  c.model.nu = num("model.nu");
  c.model.L = num("model.L");
  c.model.R = num("model.R");
  c.model.validate();

  const std::string family = s.get("reaction.family");
  if (family == "logistic") {
    c.reaction = ReactionSpec::logistic(num("reaction.mean"), to_doubles("reaction.cos", s.get("reaction.cos")),
                                        to_doubles("reaction.sin", s.get("reaction.sin")), c.model.L);
  } else if (family == "table") {
    c.reaction = ReactionSpec::logistic_table(to_doubles("reaction.table", s.get("reaction.table")), c.model.L);
  } else {
    throw ConfigError("reaction.family must be logistic or table (got '" + family + "')");
  }
  if (!(c.reaction->m() > 0.0)) {
    std::ostringstream os;
    os << "reaction: min f_v(x,0) must be > 0 (got m = " << c.reaction->m() << ")";
    throw ConfigError(os.str());
  }

  c.nx = integer("grid.nx");
  if (!s.get("grid.dy").empty()) {
    const double dy = positive("grid.dy");
    c.ny = std::lround(c.model.R / dy);
  } else {
    c.ny = integer("grid.ny");
  }
  if (c.nx < 4) throw ConfigError("grid.nx must be >= 4 (got " + std::to_string(c.nx) + ")");
  if (c.ny < 4) throw ConfigError("grid.ny must be >= 4 (got " + std::to_string(c.ny) + ")");

  c.sim.dt = positive("sim.dt");
  c.sim.T = num("sim.T");
  const std::string scheme = s.get("sim.scheme");
  if (scheme == "imex")
    c.sim.scheme = Scheme::IMEX_BE;
  else if (scheme == "explicit")
    c.sim.scheme = Scheme::Explicit;
  else
    throw ConfigError("sim.scheme must be imex or explicit (got '" + scheme + "')");
  const long every = integer("sim.record_every");
  if (every < 1) throw ConfigError("sim.record_every must be >= 1");
  c.sim.record_every = static_cast<std::size_t>(every);
  c.sim.record_from = num("sim.record_from");
  const long copies = integer("sim.domain_copies");
  if (copies < 1) throw ConfigError("sim.domain_copies must be >= 1");
  c.sim.domain_copies = static_cast<std::size_t>(copies);
  validate(c.sim, c.model, *c.reaction, c.run_grid());

  c.init.kind = s.get("init.kind");
  if (c.init.kind != "bump" && c.init.kind != "subsolution" && c.init.kind != "zero" && c.init.kind != "capacity")
    throw ConfigError("init.kind must be bump, subsolution, zero or capacity (got '" + c.init.kind + "')");
  // Default centre: mid-period on a single period, a period boundary near the middle of a window.
  const double default_center = c.sim.domain_copies == 1
                                    ? 0.5 * c.model.L
                                    : static_cast<double>(c.sim.domain_copies / 2) * c.model.L;
  c.init.center = s.get("init.center").empty() ? default_center : num("init.center");
  c.init.width = positive("init.width");
  c.init.amp_u = s.get("init.amp_u").empty() ? c.model.road_capacity() : num("init.amp_u");
  c.init.amp_v = num("init.amp_v");
  c.init.epsilon = positive("init.epsilon");

  auto& sp = c.spectral;
  if (!s.get("spectral.alphas").empty()) {
    sp.alphas = to_doubles("spectral.alphas", s.get("spectral.alphas"));
  } else if (const long n = integer("spectral.alpha_count"); n > 0) {
    const double lo = num("spectral.alpha_min"), hi = num("spectral.alpha_max");
    if (!(hi >= lo)) throw ConfigError("spectral.alpha_max must be >= spectral.alpha_min");
    for (long k = 0; k < n; ++k)
      sp.alphas.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1));
  } else {
    sp.alphas = {num("spectral.alpha")};
  }
  sp.eigen.tol = positive("spectral.tol");
  const long maxit = integer("spectral.max_iterations");
  if (maxit < 1) throw ConfigError("spectral.max_iterations must be >= 1");
  sp.eigen.max_iterations = static_cast<std::size_t>(maxit);
  sp.halfplane = flag("spectral.halfplane");
  sp.policy.nx = c.nx;
  sp.policy.dy = positive("spectral.dy");
  sp.policy.R0 = positive("spectral.R0");
  sp.policy.R_max = positive("spectral.R_max");
  sp.policy.growth = num("spectral.growth");
  sp.policy.schedule();
  sp.tol_limit = positive("spectral.tol_limit");
  sp.tol_alpha = positive("spectral.tol_alpha");
  sp.dump_operator = flag("spectral.dump_operator");

  c.steady_tol = positive("steady.tol");

  c.front.level = s.get("front.level").empty() ? 0.1 * c.model.road_capacity() : positive("front.level");
  c.front.window_fraction = positive("front.window_fraction");
  if (c.front.window_fraction > 1.0) throw ConfigError("front.window_fraction must be <= 1");
  c.front.pulsating = flag("front.pulsating");

  c.verify.alphas = to_doubles("verify.alphas", s.get("verify.alphas"));
  c.verify.R_list = to_doubles("verify.R_list", s.get("verify.R_list"));
  const long vc = integer("verify.copies");
  if (vc < 2) throw ConfigError("verify.copies must be >= 2");
  c.verify.copies = static_cast<std::size_t>(vc);
  c.verify.T = positive("verify.T");

  c.sweep_command = parse_command("sweep.command", s.get("sweep.command"));
  if (c.sweep_command != Command::Eigen && c.sweep_command != Command::Speed && c.sweep_command != Command::Steady)
    throw ConfigError("sweep.command must be eigen, speed or steady");
  const long cap = integer("sweep.max_points");
  if (cap < 0) throw ConfigError("sweep.max_points must be >= 0");
  c.sweep_max_points = static_cast<std::size_t>(cap);
  for (const auto& [key, list] : s.sweep()) {
    if (key == "command" || key == "output_dir" || key == "threads")
      throw ConfigError("sweep." + key + " cannot be swept");
  }
  return c;
}

/// Text of manifest.cfg: every key with its resolved value, sorted, then the sweep lists.
/// Feeding it back to parse_config_text reproduces the run.
inline std::string manifest_text(const RunConfig& c) {
  std::ostringstream os;
  auto value = [&](const std::string& key, const std::string& raw) -> std::string {
    // Derived defaults are written out explicitly.
    if (key == "init.center") return fmt17(c.init.center);
    if (key == "init.amp_u") return fmt17(c.init.amp_u);
    if (key == "front.level") return fmt17(c.front.level);
    if (key == "grid.ny") return std::to_string(c.ny);
    if (key == "grid.dy") return "";
    return raw;
  };
  for (const auto& [key, raw] : c.settings.values()) os << key << " = " << value(key, raw) << "\n";
  for (const auto& [key, list] : c.settings.sweep()) os << "sweep." << key << " = " << list << "\n";
  return os.str();
}

}  // namespace fieldroad
