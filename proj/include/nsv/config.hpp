#pragma once
/// @file config.hpp
/// @brief Experiment configuration: file grammar, validation, canonical
///        serialization, and factories for the objects a run needs.
///
/// The file format is flat key-value text grouped into [section] blocks;
/// '#' starts a comment, '=' separates key and value, and every key has a
/// documented default so the empty file is a valid configuration.  Unknown
/// sections or keys are rejected with the offending line number.  The
/// canonical serialization lists every key in a fixed order, which makes
/// serialize/parse a round-trip identity and gives the configuration hash a
/// stable preimage.

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nsv/errors.hpp"
#include "nsv/galerkin.hpp"
#include "nsv/initial_data.hpp"

namespace nsv {

enum class DensityPreset { kConstant, kVacuumDisk, kVacuumAnnulus,
                           kVacuumStrip, kVacuumBox };
enum class ForcingPreset { kZero, kSteadySmooth, kPulse, kFile };

/// Full description of one experiment.  Field defaults are the documented
/// configuration defaults.
struct SimConfig {
  // [grid]
  int dim = 2;
  int points = 64;
  double length = 6.283185307179586;  // 2 pi, the only supported box

  // [time]
  double horizon = 1.0;
  double dt = 1e-3;

  // [model]
  double mu = 0.1;
  double kappa = 1.0;

  // [discretization]
  int modes = 8;          // Galerkin basis size
  int mollification = 4;  // kernel index; 0 disables mollification and lift

  // [velocity]
  VelocityPreset velocity = VelocityPreset::kTaylorGreen;
  double amplitude = 1.0;
  unsigned seed = 0;

  // [density]
  DensityPreset density = DensityPreset::kConstant;
  double value = 1.0;         // level of the constant preset
  double max = 1.0;           // plateau level of the vacuum presets
  double radius = 1.2;        // disk radius / annulus inner radius
  double radius_outer = 2.0;  // annulus outer radius
  double ramp = 0.4;          // smooth transition width

  // [forcing]
  ForcingPreset forcing = ForcingPreset::kZero;
  double forcing_amplitude = 0.0;
  double window_start = 0.0;  // pulse support, inclusive start
  double window_end = 0.0;    // pulse support, exclusive end
  std::string forcing_path;   // snapshot file for the tabulated preset

  // [output]
  std::string directory = "out";
  int snapshot_stride = 0;  // 0 writes no snapshots

  // [tolerances]
  double cfl_limit = 0.9;
  double sweep_spread = 0.1;

  // [sweep]
  std::vector<int> j_list;
  std::vector<int> n_list;

  // [stability]
  std::vector<double> epsilons = {1e-3, 1e-4};
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] inline void bad_key(const std::string& key, int line,
                                 const std::string& why) {
  std::ostringstream os;
  os << "config: " << why << " '" << key << "' at line " << line;
  throw config_error(os.str());
}

inline double parse_double(const std::string& key, const std::string& v,
                           int line) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    bad_key(key, line, "unreadable numeric value for");
  }
}

inline int parse_int(const std::string& key, const std::string& v, int line) {
  try {
    std::size_t used = 0;
    long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<int>(x);
  } catch (const std::exception&) {
    bad_key(key, line, "unreadable integer value for");
  }
}

template <typename T, typename Fn>
std::vector<T> parse_list(const std::string& key, const std::string& v,
                          int line, Fn one) {
  std::vector<T> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(one(key, item, line));
  }
  return out;
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline const char* name_of(VelocityPreset p) {
  switch (p) {
    case VelocityPreset::kSingleMode: return "single_mode";
    case VelocityPreset::kTaylorGreen: return "taylor_green";
    case VelocityPreset::kRandomSeeded: return "random_seeded";
  }
  return "taylor_green";
}

inline const char* name_of(DensityPreset p) {
  switch (p) {
    case DensityPreset::kConstant: return "constant";
    case DensityPreset::kVacuumDisk: return "vacuum_disk";
    case DensityPreset::kVacuumAnnulus: return "vacuum_annulus";
    case DensityPreset::kVacuumStrip: return "vacuum_strip";
    case DensityPreset::kVacuumBox: return "vacuum_box";
  }
  return "constant";
}

inline const char* name_of(ForcingPreset p) {
  switch (p) {
    case ForcingPreset::kZero: return "zero";
    case ForcingPreset::kSteadySmooth: return "steady_smooth";
    case ForcingPreset::kPulse: return "pulse";
    case ForcingPreset::kFile: return "file";
  }
  return "zero";
}

template <typename Enum>
Enum enum_of(const std::string& key, const std::string& v, int line,
             std::initializer_list<Enum> all) {
  for (Enum e : all)
    if (v == name_of(e)) return e;
  bad_key(key, line, "unknown preset name for");
}

}  // namespace detail

/// Range and consistency checks; every violation names the offending key.
inline void validate_config(const SimConfig& c) {
  auto fail = [](const std::string& key, const std::string& why) {
    throw config_error("config: " + why + " for key '" + key + "'");
  };
  if (c.dim != 2 && c.dim != 3) fail("grid.dim", "value must be 2 or 3");
  if (c.points < 4 || (c.points & (c.points - 1)) != 0)
    fail("grid.points", "value must be a power of two, at least 4");
  if (std::abs(c.length - 6.283185307179586) > 1e-12)
    fail("grid.length", "only the 2*pi periodic box is supported");
  if (!(c.horizon > 0.0)) fail("time.horizon", "value must be positive");
  if (!(c.dt > 0.0)) fail("time.dt", "value must be positive");
  if (c.dt > c.horizon) fail("time.dt", "step exceeds the horizon");
  if (!(c.mu > 0.0)) fail("model.mu", "value must be positive");
  if (c.kappa < 0.0) fail("model.kappa", "value must be non-negative");
  if (c.modes < 1) fail("discretization.modes", "value must be positive");
  if (c.mollification < 0)
    fail("discretization.mollification", "value must be non-negative");
  if (!(c.amplitude == c.amplitude))
    fail("velocity.amplitude", "value must be finite");
  if (c.max < 0.0) fail("density.max", "value must be non-negative");
  if (c.value < 0.0) fail("density.value", "value must be non-negative");
  if (c.ramp < 0.0) fail("density.ramp", "value must be non-negative");
  if (c.density == DensityPreset::kVacuumAnnulus &&
      c.radius_outer <= c.radius)
    fail("density.radius_outer", "annulus outer radius must exceed the inner");
  if (c.forcing == ForcingPreset::kPulse && c.window_end <= c.window_start)
    fail("forcing.window_end", "pulse window must have positive width");
  if (c.forcing == ForcingPreset::kFile) {
    if (c.forcing_path.empty())
      throw config_error(
          "config: missing required key 'forcing.path' for the tabulated "
          "forcing preset");
    if (!std::filesystem::exists(c.forcing_path))
      fail("forcing.path", "referenced file does not exist");
  }
  if (!(c.cfl_limit > 0.0))
    fail("tolerances.cfl_limit", "value must be positive");
  if (!(c.sweep_spread > 0.0))
    fail("tolerances.sweep_spread", "value must be positive");
  for (double e : c.epsilons)
    if (!(e > 0.0)) fail("stability.epsilons", "entries must be positive");
  for (int j : c.j_list)
    if (j < 1) fail("sweep.j_list", "entries must be positive");
  for (int n : c.n_list)
    if (n < 0) fail("sweep.n_list", "entries must be non-negative");
}

/// Parse configuration text.  See the file header for the grammar.
inline SimConfig parse_config(std::istream& in) {
  SimConfig c;
  std::string section, raw;
  int line = 0;
  using detail::parse_double;
  using detail::parse_int;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    if (std::size_t h = s.find('#'); h != std::string::npos) s = s.substr(0, h);
    s = detail::trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw config_error("config: malformed section header at line " +
                           std::to_string(line));
      section = s.substr(1, s.size() - 2);
      continue;
    }
    std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw config_error("config: expected 'key = value' at line " +
                         std::to_string(line));
    const std::string key = section + "." + detail::trim(s.substr(0, eq));
    const std::string v = detail::trim(s.substr(eq + 1));

    if (key == "grid.dim") c.dim = parse_int(key, v, line);
    else if (key == "grid.points") c.points = parse_int(key, v, line);
    else if (key == "grid.length") c.length = parse_double(key, v, line);
    else if (key == "time.horizon") c.horizon = parse_double(key, v, line);
    else if (key == "time.dt") c.dt = parse_double(key, v, line);
    else if (key == "model.mu") c.mu = parse_double(key, v, line);
    else if (key == "model.kappa") c.kappa = parse_double(key, v, line);
    else if (key == "discretization.modes") c.modes = parse_int(key, v, line);
    else if (key == "discretization.mollification")
      c.mollification = parse_int(key, v, line);
    else if (key == "velocity.preset")
      c.velocity = detail::enum_of(key, v, line,
                                   {VelocityPreset::kSingleMode,
                                    VelocityPreset::kTaylorGreen,
                                    VelocityPreset::kRandomSeeded});
    else if (key == "velocity.amplitude")
      c.amplitude = parse_double(key, v, line);
    else if (key == "velocity.seed")
      c.seed = static_cast<unsigned>(parse_int(key, v, line));
    else if (key == "density.preset")
      c.density = detail::enum_of(key, v, line,
                                  {DensityPreset::kConstant,
                                   DensityPreset::kVacuumDisk,
                                   DensityPreset::kVacuumAnnulus,
                                   DensityPreset::kVacuumStrip,
                                   DensityPreset::kVacuumBox});
    else if (key == "density.value") c.value = parse_double(key, v, line);
    else if (key == "density.max") c.max = parse_double(key, v, line);
    else if (key == "density.radius") c.radius = parse_double(key, v, line);
    else if (key == "density.radius_outer")
      c.radius_outer = parse_double(key, v, line);
    else if (key == "density.ramp") c.ramp = parse_double(key, v, line);
    else if (key == "forcing.preset")
      c.forcing = detail::enum_of(key, v, line,
                                  {ForcingPreset::kZero,
                                   ForcingPreset::kSteadySmooth,
                                   ForcingPreset::kPulse,
                                   ForcingPreset::kFile});
    else if (key == "forcing.amplitude")
      c.forcing_amplitude = parse_double(key, v, line);
    else if (key == "forcing.window_start")
      c.window_start = parse_double(key, v, line);
    else if (key == "forcing.window_end")
      c.window_end = parse_double(key, v, line);
    else if (key == "forcing.path") c.forcing_path = v;
    else if (key == "output.directory") c.directory = v;
    else if (key == "output.snapshot_stride")
      c.snapshot_stride = parse_int(key, v, line);
    else if (key == "tolerances.cfl_limit")
      c.cfl_limit = parse_double(key, v, line);
    else if (key == "tolerances.sweep_spread")
      c.sweep_spread = parse_double(key, v, line);
    else if (key == "sweep.j_list")
      c.j_list = detail::parse_list<int>(key, v, line, parse_int);
    else if (key == "sweep.n_list")
      c.n_list = detail::parse_list<int>(key, v, line, parse_int);
    else if (key == "stability.epsilons")
      c.epsilons = detail::parse_list<double>(key, v, line, parse_double);
    else detail::bad_key(key, line, "unknown key");
  }
  validate_config(c);
  return c;
}

inline SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw config_error("config: cannot open file '" + path + "'");
  return parse_config(in);
}

/// Canonical text form: every key explicit, fixed order, full precision.
inline std::string serialize_config(const SimConfig& c) {
  using detail::fmt;
  std::ostringstream os;
  os << "[grid]\n"
     << "dim = " << c.dim << "\n"
     << "points = " << c.points << "\n"
     << "length = " << fmt(c.length) << "\n\n"
     << "[time]\n"
     << "horizon = " << fmt(c.horizon) << "\n"
     << "dt = " << fmt(c.dt) << "\n\n"
     << "[model]\n"
     << "mu = " << fmt(c.mu) << "\n"
     << "kappa = " << fmt(c.kappa) << "\n\n"
     << "[discretization]\n"
     << "modes = " << c.modes << "\n"
     << "mollification = " << c.mollification << "\n\n"
     << "[velocity]\n"
     << "preset = " << detail::name_of(c.velocity) << "\n"
     << "amplitude = " << fmt(c.amplitude) << "\n"
     << "seed = " << c.seed << "\n\n"
     << "[density]\n"
     << "preset = " << detail::name_of(c.density) << "\n"
     << "value = " << fmt(c.value) << "\n"
     << "max = " << fmt(c.max) << "\n"
     << "radius = " << fmt(c.radius) << "\n"
     << "radius_outer = " << fmt(c.radius_outer) << "\n"
     << "ramp = " << fmt(c.ramp) << "\n\n"
     << "[forcing]\n"
     << "preset = " << detail::name_of(c.forcing) << "\n"
     << "amplitude = " << fmt(c.forcing_amplitude) << "\n"
     << "window_start = " << fmt(c.window_start) << "\n"
     << "window_end = " << fmt(c.window_end) << "\n";
  if (!c.forcing_path.empty()) os << "path = " << c.forcing_path << "\n";
  os << "\n[output]\n"
     << "directory = " << c.directory << "\n"
     << "snapshot_stride = " << c.snapshot_stride << "\n\n"
     << "[tolerances]\n"
     << "cfl_limit = " << fmt(c.cfl_limit) << "\n"
     << "sweep_spread = " << fmt(c.sweep_spread) << "\n\n"
     << "[sweep]\n";
  os << "j_list = ";
  for (std::size_t i = 0; i < c.j_list.size(); ++i)
    os << (i ? "," : "") << c.j_list[i];
  os << "\nn_list = ";
  for (std::size_t i = 0; i < c.n_list.size(); ++i)
    os << (i ? "," : "") << c.n_list[i];
  os << "\n\n[stability]\nepsilons = ";
  for (std::size_t i = 0; i < c.epsilons.size(); ++i)
    os << (i ? "," : "") << fmt(c.epsilons[i]);
  os << "\n";
  return os.str();
}

/// FNV-1a 64-bit digest of the canonical serialization, as 16 hex digits.
inline std::string config_hash(const SimConfig& c) {
  const std::string s = serialize_config(c);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char b : s) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

inline Grid make_grid(const SimConfig& c) { return Grid(c.dim, c.points); }

/// Initial density per the preset; vacuum presets pass through the
/// mollification lift, the constant preset is taken as already prepared.
inline DensityField make_density(const SimConfig& c, const Grid& g) {
  if (c.density == DensityPreset::kConstant)
    return DensityField::constant(g, c.value);
  VacuumRegion reg;
  switch (c.density) {
    case DensityPreset::kVacuumDisk: reg.shape = VacuumShape::kDisk; break;
    case DensityPreset::kVacuumAnnulus:
      reg.shape = VacuumShape::kAnnulus;
      break;
    case DensityPreset::kVacuumStrip: reg.shape = VacuumShape::kStripe; break;
    default: reg.shape = VacuumShape::kFullBox; break;
  }
  reg.radius = c.radius;
  reg.radius_outer = c.radius_outer;
  reg.ramp = c.ramp;
  DensityField rho0 = make_vacuum_density(g, reg, c.max);
  return lift_density(rho0, c.mollification, c.max);
}

inline NodalField make_velocity(const SimConfig& c, const Grid& g) {
  return velocity_preset(g, c.velocity, c.amplitude, c.seed);
}

namespace detail {

/// Smooth, constant-in-time forcing shape: component a oscillates in the
/// next coordinate, so the field is divergence-free and zero-mean.
inline NodalField steady_shape(const Grid& g, double amp) {
  NodalField f = NodalField::zeros(g, g.dim);
  const int n = g.n;
  const double h = 6.283185307179586 / n;
  const std::size_t npts = f.comp[0].size();
  for (int a = 0; a < g.dim; ++a) {
    const int b = (a + 1) % g.dim;
    for (std::size_t idx = 0; idx < npts; ++idx) {
      std::size_t rest = idx;
      int coord[3] = {0, 0, 0};
      for (int d = g.dim - 1; d >= 0; --d) {
        coord[d] = static_cast<int>(rest % n);
        rest /= n;
      }
      f.comp[a][idx] = amp * std::cos(h * coord[b]);
    }
  }
  return f;
}

}  // namespace detail

/// Build the forcing callback for a configuration.  The returned object is
/// self-contained; copying it keeps it valid.
inline Forcing make_forcing(const SimConfig& c, const Grid& g);

}  // namespace nsv
