#include "meevc/config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace meevc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Drops a trailing `#` comment that is not inside double quotes.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

[[noreturn]] void fail_at(int line, const std::string& what) {
  throw ConfigError("line " + std::to_string(line) + ": " + what);
}

double to_double(const std::string& key, const std::string& v, int line) {
  double out = 0.0;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  if (!v.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || !std::isfinite(out))
    fail_at(line, key + " expects a number, got '" + v + "'");
  return out;
}

long to_long(const std::string& key, const std::string& v, int line) {
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    fail_at(line, key + " expects an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail_at(line, key + " expects true or false, got '" + v + "'");
}

std::string to_string_value(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

using Setter = std::function<void(const std::string& value, int line)>;

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::map<std::string, int> key_line;

  std::map<std::string, std::map<std::string, Setter>> table;
  auto num = [&](double& target, const char* name) {
    return [&target, name](const std::string& v, int line) { target = to_double(name, v, line); };
  };
  auto integer = [&](auto& target, const char* name) {
    return [&target, name](const std::string& v, int line) {
      target = static_cast<std::remove_reference_t<decltype(target)>>(to_long(name, v, line));
    };
  };
  auto wrap = [](auto fn) {
    return [fn](const std::string& v, int line) {
      try {
        fn(to_string_value(v));
      } catch (const std::exception& e) {
        fail_at(line, e.what());
      }
    };
  };

  auto& mesh = table["mesh"];
  mesh["kind"] = wrap([&](const std::string& v) {
    if (v == "channel") cfg.mesh.kind = MeshKind::Channel;
    else if (v == "periodic") cfg.mesh.kind = MeshKind::Periodic;
    else throw ConfigError("mesh.kind must be channel or periodic, got '" + v + "'");
  });
  mesh["length"] = num(cfg.mesh.geometry.length, "mesh.length");
  mesh["height"] = num(cfg.mesh.geometry.height, "mesh.height");
  mesh["lock_length"] = num(cfg.mesh.geometry.lock_length, "mesh.lock_length");
  mesh["nx"] = integer(cfg.mesh.nx, "mesh.nx");
  mesh["ny"] = integer(cfg.mesh.ny, "mesh.ny");
  mesh["pattern"] = wrap([&](const std::string& v) { cfg.mesh.pattern = parse_pattern(v); });
  mesh["import"] = wrap([&](const std::string& v) { cfg.mesh.import_path = v; });

  auto& physics = table["physics"];
  physics["mode"] = wrap([&](const std::string& v) { cfg.physics.mode = parse_mode(v); });
  physics["grashof"] = num(cfg.physics.grashof, "physics.grashof");
  physics["schmidt"] = num(cfg.physics.schmidt, "physics.schmidt");
  physics["settling_velocity"] = num(cfg.physics.settling_velocity, "physics.settling_velocity");
  physics["nu"] = num(cfg.physics.nu, "physics.nu");

  table["discretization"]["degree"] = integer(cfg.degree, "discretization.degree");

  auto& time = table["time"];
  time["dt"] = num(cfg.time.dt, "time.dt");
  time["t_end"] = num(cfg.time.t_end, "time.t_end");
  time["startup_tol"] = num(cfg.time.startup_tol, "time.startup_tol");
  time["startup_max_iter"] = integer(cfg.time.startup_max_iter, "time.startup_max_iter");

  auto& initial = table["initial"];
  initial["interface_width"] = num(cfg.initial.interface_width, "initial.interface_width");
  initial["velocity"] = wrap([&](const std::string& v) { cfg.initial.velocity = parse_velocity_init(v); });
  initial["seed"] = [&](const std::string& v, int line) {
    const long s = to_long("initial.seed", v, line);
    if (s < 0) fail_at(line, "initial.seed must be non-negative");
    cfg.initial.seed = static_cast<std::uint64_t>(s);
  };

  auto& solver = table["solver"];
  solver["strategy"] = wrap([&](const std::string& v) { cfg.solver.strategy = parse_strategy(v); });
  solver["tolerance"] = num(cfg.solver.tolerance, "solver.tolerance");

  auto& output = table["output"];
  output["dir"] = wrap([&](const std::string& v) { cfg.output.dir = v; });
  output["csv_every"] = integer(cfg.output.csv_every, "output.csv_every");
  output["vtk_every"] = integer(cfg.output.vtk_every, "output.vtk_every");
  output["checkpoint_every"] = integer(cfg.output.checkpoint_every, "output.checkpoint_every");

  auto& diag = table["diagnostics"];
  diag["front_threshold"] = num(cfg.front.threshold, "diagnostics.front_threshold");
  diag["front_columns"] = integer(cfg.front.columns, "diagnostics.front_columns");

  table["flags"]["literal_top_wall_sign"] = [&](const std::string& v, int line) {
    cfg.literal_top_wall_sign = to_bool("flags.literal_top_wall_sign", v, line);
  };

  std::set<std::string> sections_seen;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail_at(line, "malformed section header '" + s + "'");
      section = trim(s.substr(1, s.size() - 2));
      if (!table.count(section)) fail_at(line, "unknown section [" + section + "]");
      sections_seen.insert(section);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail_at(line, "expected 'key = value', got '" + s + "'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (section.empty()) fail_at(line, "key '" + key + "' appears before any section header");
    auto& keys = table[section];
    const auto it = keys.find(key);
    if (it == keys.end()) fail_at(line, "unknown key " + section + "." + key);
    const std::string full = section + "." + key;
    if (key_line.count(full)) fail_at(line, "duplicate key " + full);
    if (value.empty()) fail_at(line, full + " has no value");
    key_line[full] = line;
    it->second(value, line);
  }

  for (const char* required : {"mesh", "time"})
    if (!sections_seen.count(required))
      throw ConfigError(std::string("missing mandatory section [") + required + "]");

  auto check = [&](bool ok, const std::string& key, const std::string& what) {
    if (ok) return;
    const auto it = key_line.find(key);
    std::string msg = key + ": " + what;
    if (it != key_line.end()) msg = "line " + std::to_string(it->second) + ": " + msg;
    throw ConfigError(msg);
  };

  const MeshConfig& m = cfg.mesh;
  check(m.geometry.length > 0.0, "mesh.length", "must be positive");
  check(m.geometry.height > 0.0, "mesh.height", "must be positive");
  if (m.kind == MeshKind::Channel) {
    check(m.geometry.lock_length > 0.0 && m.geometry.lock_length < m.geometry.length, "mesh.lock_length",
          "must lie strictly between 0 and mesh.length");
    if (m.import_path.empty()) {
      check(m.nx >= 1, "mesh.nx", "must be at least 1");
      check(m.ny >= 1, "mesh.ny", "must be at least 1");
    }
  } else {
    check(m.import_path.empty(), "mesh.import", "periodic meshes cannot be imported");
    check(m.nx >= 2, "mesh.nx", "must be at least 2 on a periodic mesh");
    check(m.ny >= 2, "mesh.ny", "must be at least 2 on a periodic mesh");
  }

  const PhysicsConfig& p = cfg.physics;
  check(p.grashof > 0.0, "physics.grashof", "must be positive");
  check(p.schmidt > 0.0, "physics.schmidt", "must be positive");
  check(p.settling_velocity >= 0.0, "physics.settling_velocity", "must be non-negative");
  check(p.nu >= 0.0, "physics.nu", "must be non-negative");
  check(p.mode != Mode::Turbidity || m.kind == MeshKind::Channel, "physics.mode",
        "turbidity mode needs a channel mesh");
  check(p.mode != Mode::Homogeneous || m.kind == MeshKind::Periodic, "physics.mode",
        "homogeneous mode needs a periodic mesh");

  check(cfg.degree >= 1 && cfg.degree <= 8, "discretization.degree", "must lie in [1, 8]");

  const TimeConfig& t = cfg.time;
  check(t.dt > 0.0, "time.dt", "must be positive");
  check(t.t_end >= t.dt, "time.t_end", "must be at least time.dt");
  check(t.startup_tol > 0.0, "time.startup_tol", "must be positive");
  check(t.startup_max_iter >= 1, "time.startup_max_iter", "must be at least 1");

  check(cfg.initial.interface_width >= 0.0, "initial.interface_width", "must be non-negative (0 = default)");
  check(cfg.solver.tolerance > 0.0, "solver.tolerance", "must be positive");
  check(!cfg.output.dir.empty(), "output.dir", "must not be empty");
  check(cfg.output.csv_every >= 1, "output.csv_every", "must be at least 1");
  check(cfg.output.vtk_every >= 0, "output.vtk_every", "must be non-negative");
  check(cfg.output.checkpoint_every >= 0, "output.checkpoint_every", "must be non-negative");
  check(cfg.front.threshold > 0.0 && cfg.front.threshold < 1.0, "diagnostics.front_threshold",
        "must lie in (0, 1)");
  check(cfg.front.columns >= 0, "diagnostics.front_columns", "must be non-negative");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig cfg = parse_config(buf.str());
  const auto parent = std::filesystem::path(path).parent_path();
  cfg.base_dir = parent.empty() ? "." : parent.string();
  return cfg;
}

std::shared_ptr<const Mesh> build_mesh(const RunConfig& config) {
  const MeshConfig& m = config.mesh;
  if (m.kind == MeshKind::Periodic)
    return std::make_shared<const Mesh>(
        build_periodic_rect_mesh(m.geometry.length, m.geometry.height, m.nx, m.ny, m.pattern));
  if (!m.import_path.empty()) {
    std::filesystem::path p(m.import_path);
    if (p.is_relative()) p = std::filesystem::path(config.base_dir) / p;
    return std::make_shared<const Mesh>(read_mesh_file(p.string(), m.geometry));
  }
  return std::make_shared<const Mesh>(build_channel_mesh(m.geometry, m.nx, m.ny, m.pattern));
}

}  // namespace meevc
