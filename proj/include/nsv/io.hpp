#pragma once
/// @file io.hpp
/// @brief Diagnostic persistence: newline-delimited ledger streams, binary
///        field snapshots, run summaries, and CSV export for plotting.
///
/// Every file begins with an ASCII header line carrying the configuration
/// hash, so any artifact can be traced to the exact configuration that
/// produced it.  Ledger and summary files are plain text with one record or
/// key per line, flushed as they are written; a crashed run leaves a
/// parseable prefix.  Snapshots store raw little-endian doubles after a
/// one-line text header: magic and version, then dim, points, component
/// count, and the sample time, then each component row-major.

#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nsv/config.hpp"
#include "nsv/estimates.hpp"
#include "nsv/stability.hpp"

namespace nsv {

inline constexpr const char* kLedgerSchema =
    "time sqrt_rho_u_sq grad_u_sq sqrt_rho_ut_sq grad_ut_sq d2u_sq d2ut_sq "
    "grad_p_sq rho_min rho_max energy_functional f_sq";

namespace detail {

inline std::string format_record(const EstimateRecord& r, char sep) {
  const double cols[12] = {r.time,       r.sqrt_rho_u_sq, r.grad_u_sq,
                           r.sqrt_rho_ut_sq, r.grad_ut_sq, r.d2u_sq,
                           r.d2ut_sq,    r.grad_p_sq,     r.rho_min,
                           r.rho_max,    r.energy_functional, r.f_sq};
  std::string out;
  char buf[64];
  for (int i = 0; i < 12; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", cols[i]);
    if (i) out.push_back(sep);
    out += buf;
  }
  return out;
}

inline std::string header_hash(const std::string& line) {
  const std::size_t at = line.find("config=");
  if (at == std::string::npos)
    throw config_error("io: missing config hash in header line");
  return line.substr(at + 7, 16);
}

}  // namespace detail

/// Streams one diagnostic line per record, flushing each so interrupted
/// runs keep a readable prefix.
class LedgerWriter {
 public:
  LedgerWriter(const std::string& path, const std::string& config_hex)
      : out_(path, std::ios::trunc) {
    if (!out_) throw config_error("io: cannot open ledger file '" + path + "'");
    out_ << "# nsv-ledger v1 config=" << config_hex << "\n"
         << "# " << kLedgerSchema << "\n";
    out_.flush();
  }

  void push(const EstimateRecord& r) {
    out_ << detail::format_record(r, ' ') << "\n";
    out_.flush();
  }

 private:
  std::ofstream out_;
};

/// Parse a ledger file back into records; returns the header hash.
inline std::string read_ledger(const std::string& path,
                               std::vector<EstimateRecord>& records) {
  std::ifstream in(path);
  if (!in) throw config_error("io: cannot open ledger file '" + path + "'");
  std::string line, hash;
  bool first = true;
  records.clear();
  while (std::getline(in, line)) {
    if (first) {
      hash = detail::header_hash(line);
      first = false;
      continue;
    }
    if (line.empty() || line.front() == '#') continue;
    std::istringstream is(line);
    EstimateRecord r;
    if (!(is >> r.time >> r.sqrt_rho_u_sq >> r.grad_u_sq >> r.sqrt_rho_ut_sq >>
          r.grad_ut_sq >> r.d2u_sq >> r.d2ut_sq >> r.grad_p_sq >> r.rho_min >>
          r.rho_max >> r.energy_functional >> r.f_sq))
      throw config_error("io: malformed ledger row in '" + path + "'");
    records.push_back(r);
  }
  if (first) throw config_error("io: empty ledger file '" + path + "'");
  return hash;
}

/// One stored field: scalar density or a velocity's components.
struct Snapshot {
  std::string config;
  int dim = 0;
  int points = 0;
  double time = 0.0;
  std::vector<std::vector<double>> components;
};

inline void write_snapshot(const std::string& path,
                           const std::string& config_hex, const Grid& g,
                           double time,
                           const std::vector<const std::vector<double>*>&
                               components) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw config_error("io: cannot open snapshot file '" + path + "'");
  out << "NSVSNAP v1 config=" << config_hex << "\n";
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(g.dim),
                                 static_cast<std::uint32_t>(g.n),
                                 static_cast<std::uint32_t>(components.size())};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  out.write(reinterpret_cast<const char*>(&time), sizeof time);
  for (const std::vector<double>* comp : components)
    out.write(reinterpret_cast<const char*>(comp->data()),
              static_cast<std::streamsize>(comp->size() * sizeof(double)));
  if (!out) throw config_error("io: short write on snapshot '" + path + "'");
}

inline void write_snapshot(const std::string& path,
                           const std::string& config_hex, const NodalField& u,
                           double time) {
  std::vector<const std::vector<double>*> comps;
  for (int c = 0; c < u.ncomp; ++c) comps.push_back(&u.comp[c]);
  write_snapshot(path, config_hex, u.grid, time, comps);
}

inline void write_snapshot(const std::string& path,
                           const std::string& config_hex,
                           const DensityField& rho, double time) {
  write_snapshot(path, config_hex, rho.grid, time, {&rho.v});
}

inline Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw config_error("io: cannot open snapshot file '" + path + "'");
  std::string header;
  std::getline(in, header);
  if (header.rfind("NSVSNAP v1 ", 0) != 0)
    throw config_error("io: bad snapshot magic in '" + path + "'");
  Snapshot s;
  s.config = detail::header_hash(header);
  std::uint32_t dims[3] = {0, 0, 0};
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  in.read(reinterpret_cast<char*>(&s.time), sizeof s.time);
  s.dim = static_cast<int>(dims[0]);
  s.points = static_cast<int>(dims[1]);
  if (!in || s.dim < 1 || s.dim > 3 || s.points < 1 || dims[2] < 1 ||
      dims[2] > 3)
    throw config_error("io: malformed snapshot header in '" + path + "'");
  std::size_t npts = 1;
  for (int d = 0; d < s.dim; ++d) npts *= static_cast<std::size_t>(s.points);
  s.components.assign(dims[2], std::vector<double>(npts));
  for (std::vector<double>& comp : s.components)
    in.read(reinterpret_cast<char*>(comp.data()),
            static_cast<std::streamsize>(npts * sizeof(double)));
  if (!in) throw config_error("io: truncated snapshot '" + path + "'");
  return s;
}

/// Key-value run summary with the same provenance header as the ledger.
inline void write_summary(
    const std::string& path, const std::string& config_hex,
    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw config_error("io: cannot open summary file '" + path + "'");
  out << "# nsv-summary v1 config=" << config_hex << "\n";
  for (const auto& [k, v] : entries) out << k << " = " << v << "\n";
  out.flush();
}

inline std::map<std::string, std::string> read_summary(
    const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw config_error("io: cannot open summary file '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string k = line.substr(0, eq);
    std::string v = line.substr(eq + 1);
    while (!k.empty() && k.back() == ' ') k.pop_back();
    while (!v.empty() && v.front() == ' ') v.erase(v.begin());
    out[k] = v;
  }
  return out;
}

/// Comma-separated ledger export with a column header, for plotting tools.
inline void write_plot_csv(const std::string& path,
                           const std::string& config_hex,
                           const std::vector<EstimateRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw config_error("io: cannot open csv file '" + path + "'");
  out << "# nsv-plot v1 config=" << config_hex << "\n";
  std::string columns = kLedgerSchema;
  for (char& ch : columns)
    if (ch == ' ') ch = ',';
  out << columns << "\n";
  for (const EstimateRecord& r : records)
    out << detail::format_record(r, ',') << "\n";
  out.flush();
}

/// Difference-energy series export used by the stability driver.
inline void write_series_csv(const std::string& path,
                             const std::string& config_hex,
                             const GronwallSeries& s) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw config_error("io: cannot open csv file '" + path + "'");
  out << "# nsv-plot v1 config=" << config_hex << "\n";
  out << "time,difference_energy,majorant_integrand,bound\n";
  char buf[256];
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", s.t[i],
                  s.energy[i], s.integrand[i], s.bound[i]);
    out << buf << "\n";
  }
  out.flush();
}

/// Forcing factory.  Analytic presets scale a smooth divergence-free shape;
/// the tabulated preset replays a stored snapshot verbatim, so its
/// amplitude key is ignored.
inline Forcing make_forcing(const SimConfig& c, const Grid& g) {
  Forcing f;
  switch (c.forcing) {
    case ForcingPreset::kZero:
      break;
    case ForcingPreset::kSteadySmooth: {
      NodalField shape = detail::steady_shape(g, c.forcing_amplitude);
      f.eval = [shape](double, NodalField& out) { out = shape; };
      break;
    }
    case ForcingPreset::kPulse: {
      NodalField shape = detail::steady_shape(g, c.forcing_amplitude);
      const double t0 = c.window_start, t1 = c.window_end;
      f.eval = [shape, t0, t1](double t, NodalField& out) {
        if (t >= t0 && t < t1) {
          out = shape;
        } else {
          out = NodalField::zeros(shape.grid, shape.grid.dim);
        }
      };
      break;
    }
    case ForcingPreset::kFile: {
      Snapshot snap = read_snapshot(c.forcing_path);
      if (snap.dim != g.dim || snap.points != g.n ||
          static_cast<int>(snap.components.size()) != g.dim)
        throw config_error(
            "config: tabulated forcing grid does not match key 'grid.points'");
      NodalField shape = NodalField::zeros(g, g.dim);
      for (int a = 0; a < g.dim; ++a)
        shape.comp[a] = snap.components[static_cast<std::size_t>(a)];
      f.eval = [shape](double, NodalField& out) { out = shape; };
      break;
    }
  }
  return f;
}

}  // namespace nsv
