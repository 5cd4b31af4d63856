#include "qhhg/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace qhhg {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), result.ptr);
}

double to_double(const std::string& text, const std::string& key, int line) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ConfigError("key '" + key + "' expects a number, got '" + text + "'", line);
  }
  return value;
}

int to_int(const std::string& text, const std::string& key, int line) {
  int value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("key '" + key + "' expects an integer, got '" + text + "'", line);
  }
  return value;
}

std::optional<int> to_optional_int(const std::string& text, const std::string& key, int line) {
  if (text == "none") return std::nullopt;
  return to_int(text, key, line);
}

struct Entry {
  std::string value;
  int line;
};

}  // namespace

ConfigError::ConfigError(const std::string& message, int line)
    : ParameterError(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line) {}

std::string to_string(PathKind kind) {
  switch (kind) {
    case PathKind::full_eom: return "full_eom";
    case PathKind::analytic_u0: return "analytic_u0";
    case PathKind::perturbative: return "perturbative";
  }
  return "unknown";
}

PathKind parse_path_kind(const std::string& text) {
  if (text == "full_eom") return PathKind::full_eom;
  if (text == "analytic_u0") return PathKind::analytic_u0;
  if (text == "perturbative") return PathKind::perturbative;
  throw ConfigError("unknown path '" + text + "' (full_eom, analytic_u0, perturbative)");
}

void RunConfig::validate() const {
  try {
    model.validate();
    pulse.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  if (model.sites > 16) throw ConfigError("L must not exceed 16");
  if (sector.momentum && (*sector.momentum < 0 || *sector.momentum >= model.sites)) {
    throw ConfigError("momentum must lie in 0..L-1");
  }
  if (sector.parity && *sector.parity != 1 && *sector.parity != -1) {
    throw ConfigError("parity must be +1, -1 or none");
  }
  if (sector.parity && model.sites % 2 != 0) {
    throw ConfigError("spin-flip parity needs n_up == n_down, i.e. even L at half filling");
  }
  if (!(modes.omega_min > 0.0) || !(modes.d_omega > 0.0) || modes.omega_max < modes.omega_min) {
    throw ConfigError("mode grid needs 0 < omega_min <= omega_max and d_omega > 0");
  }
  if (!(modes.g0 > 0.0)) throw ConfigError("g0 must be positive");
  if (modes.fock_cutoff < 1) throw ConfigError("fock_cutoff must be at least 1");
  if (!(numerics.dt > 0.0) || numerics.dt >= pulse.t_end()) {
    throw ConfigError("dt must be positive and shorter than the pulse");
  }
  if (numerics.substeps < 1) throw ConfigError("substeps must be at least 1");
  if (numerics.krylov_dim < 2) throw ConfigError("krylov_dim must be at least 2");
  if (numerics.channels < 0) throw ConfigError("channels must be non-negative");
  if (numerics.workers < 0) throw ConfigError("workers must be non-negative");
  if (path == PathKind::analytic_u0 && model.U != 0.0) {
    throw ConfigError("path analytic_u0 requires U = 0");
  }
  if (output.empty()) throw ConfigError("output must not be empty");
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  auto opt = [](const std::optional<int>& v, bool sign) {
    if (!v) return std::string("none");
    return (sign && *v > 0 ? "+" : "") + std::to_string(*v);
  };
  out << "[model]\n"
      << "L = " << model.sites << "\n"
      << "U = " << format_double(model.U) << "\n"
      << "t0 = " << format_double(model.t0) << "\n"
      << "a = " << format_double(model.a) << "\n\n"
      << "[pulse]\n"
      << "A0 = " << format_double(pulse.A0) << "\n"
      << "omega_L = " << format_double(pulse.omega_L) << "\n"
      << "n_cycles = " << pulse.n_cycles << "\n\n"
      << "[sector]\n"
      << "momentum = " << opt(sector.momentum, false) << "\n"
      << "parity = " << opt(sector.parity, true) << "\n\n"
      << "[modes]\n"
      << "omega_min = " << format_double(modes.omega_min) << "\n"
      << "omega_max = " << format_double(modes.omega_max) << "\n"
      << "d_omega = " << format_double(modes.d_omega) << "\n"
      << "g0 = " << format_double(modes.g0) << "\n"
      << "fock_cutoff = " << modes.fock_cutoff << "\n\n"
      << "[numerics]\n"
      << "dt = " << format_double(numerics.dt) << "\n"
      << "substeps = " << numerics.substeps << "\n"
      << "krylov_dim = " << numerics.krylov_dim << "\n"
      << "channels = " << numerics.channels << "\n"
      << "workers = " << numerics.workers << "\n\n"
      << "[run]\n"
      << "path = " << to_string(path) << "\n"
      << "output = " << output << "\n";
  return out.str();
}

RunConfig parse_config_text(const std::string& text) {
  std::map<std::string, Entry> entries;  // "section.key"
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto comment = raw.find_first_of("#;");
    std::string line = trim(comment == std::string::npos ? raw : raw.substr(0, comment));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header", line_no);
      section = trim(line.substr(1, line.size() - 2));
      static const std::set<std::string> known{"model", "pulse", "sector", "modes", "numerics", "run"};
      if (!known.count(section)) throw ConfigError("unknown section [" + section + "]", line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
    if (section.empty()) throw ConfigError("key outside of a section", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line_no);
    const std::string full = section + "." + key;
    if (const auto it = entries.find(full); it != entries.end()) {
      throw ConfigError("duplicate key '" + full + "' (first defined on line " +
                            std::to_string(it->second.line) + ")",
                        line_no);
    }
    entries[full] = {value, line_no};
  }

  RunConfig cfg;
  using Setter = std::function<void(const std::string&, const std::string&, int)>;
  double u_over_t0 = 0.0;
  bool has_u_ratio = false;
  bool has_u_abs = false;
  const std::map<std::string, Setter> setters = {
      {"model.L", [&](auto& v, auto& k, int l) { cfg.model.sites = to_int(v, k, l); }},
      {"model.U_over_t0",
       [&](auto& v, auto& k, int l) {
         u_over_t0 = to_double(v, k, l);
         has_u_ratio = true;
       }},
      {"model.U",
       [&](auto& v, auto& k, int l) {
         cfg.model.U = to_double(v, k, l);
         has_u_abs = true;
       }},
      {"model.t0", [&](auto& v, auto& k, int l) { cfg.model.t0 = to_double(v, k, l); }},
      {"model.a", [&](auto& v, auto& k, int l) { cfg.model.a = to_double(v, k, l); }},
      {"pulse.A0", [&](auto& v, auto& k, int l) { cfg.pulse.A0 = to_double(v, k, l); }},
      {"pulse.omega_L", [&](auto& v, auto& k, int l) { cfg.pulse.omega_L = to_double(v, k, l); }},
      {"pulse.n_cycles", [&](auto& v, auto& k, int l) { cfg.pulse.n_cycles = to_int(v, k, l); }},
      {"sector.momentum",
       [&](auto& v, auto& k, int l) { cfg.sector.momentum = to_optional_int(v, k, l); }},
      {"sector.parity",
       [&](auto& v, auto& k, int l) { cfg.sector.parity = to_optional_int(v, k, l); }},
      {"modes.omega_min", [&](auto& v, auto& k, int l) { cfg.modes.omega_min = to_double(v, k, l); }},
      {"modes.omega_max", [&](auto& v, auto& k, int l) { cfg.modes.omega_max = to_double(v, k, l); }},
      {"modes.d_omega", [&](auto& v, auto& k, int l) { cfg.modes.d_omega = to_double(v, k, l); }},
      {"modes.g0", [&](auto& v, auto& k, int l) { cfg.modes.g0 = to_double(v, k, l); }},
      {"modes.fock_cutoff", [&](auto& v, auto& k, int l) { cfg.modes.fock_cutoff = to_int(v, k, l); }},
      {"numerics.dt", [&](auto& v, auto& k, int l) { cfg.numerics.dt = to_double(v, k, l); }},
      {"numerics.substeps", [&](auto& v, auto& k, int l) { cfg.numerics.substeps = to_int(v, k, l); }},
      {"numerics.krylov_dim",
       [&](auto& v, auto& k, int l) { cfg.numerics.krylov_dim = to_int(v, k, l); }},
      {"numerics.channels", [&](auto& v, auto& k, int l) { cfg.numerics.channels = to_int(v, k, l); }},
      {"numerics.workers", [&](auto& v, auto& k, int l) { cfg.numerics.workers = to_int(v, k, l); }},
      {"run.path",
       [&](auto& v, auto&, int l) {
         try {
           cfg.path = parse_path_kind(v);
         } catch (const ConfigError& e) {
           throw ConfigError(e.what(), l);
         }
       }},
      {"run.output", [&](auto& v, auto&, int) { cfg.output = v; }},
  };

  for (const auto& [key, entry] : entries) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown key '" + key + "'", entry.line);
    it->second(entry.value, key, entry.line);
  }
  if (!entries.count("model.L")) throw ConfigError("missing required key 'model.L'");
  if (has_u_ratio && has_u_abs) {
    throw ConfigError("give either model.U_over_t0 or model.U, not both",
                      entries.at("model.U").line);
  }
  if (!has_u_ratio && !has_u_abs) {
    throw ConfigError("missing required key 'model.U_over_t0' (or 'model.U')");
  }
  if (!entries.count("run.path")) throw ConfigError("missing required key 'run.path'");
  if (has_u_ratio) cfg.model.U = u_over_t0 * cfg.model.t0;
  cfg.validate();
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::filesystem::path resolve_output_dir(const RunConfig& config) {
  std::filesystem::path out(config.output);
  if (out.is_relative()) {
    if (const char* root = std::getenv("QHHG_OUTPUT_ROOT"); root && *root) {
      return std::filesystem::path(root) / out;
    }
  }
  return out;
}

}  // namespace qhhg
