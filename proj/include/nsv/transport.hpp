#pragma once
/// @file transport.hpp
/// @brief Semi-Lagrangian density transport.  Characteristics are traced
///        backward with a midpoint step; the density is read at the foot with
///        multilinear interpolation clamped to the surrounding nodal values,
///        so each output value is a convex combination of input values and
///        the discrete range can only shrink.  This trades exact Lq
///        conservation for an exact maximum principle.
///
/// All tracing arithmetic runs in index coordinates: a zero velocity leaves
/// the field bitwise unchanged, and a whole-cell uniform translation is an
/// exact shift.

#include <cmath>
#include <limits>

#include "nsv/field.hpp"

namespace nsv {

namespace detail {

inline int wrap_index(int i, int n) { return (i % n + n) % n; }

/// Multilinear interpolation of one component at fractional index coords.
/// If clamp is set the result is limited to the min/max of the stencil.
inline double interp_index(const Grid& g, const std::vector<double>& f,
                           const double* s, bool clamp) {
  int base[3] = {0, 0, 0};
  double xi[3] = {0, 0, 0};
  for (int a = 0; a < g.dim; ++a) {
    double fl = std::floor(s[a]);
    base[a] = int(fl);
    xi[a] = s[a] - fl;
  }
  const int n = g.n;
  double acc = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  if (g.dim == 2) {
    int i0 = wrap_index(base[0], n), i0p = wrap_index(base[0] + 1, n);
    int i1 = wrap_index(base[1], n), i1p = wrap_index(base[1] + 1, n);
    double v00 = f[g.flat(i0, i1)], v01 = f[g.flat(i0, i1p)];
    double v10 = f[g.flat(i0p, i1)], v11 = f[g.flat(i0p, i1p)];
    acc = (1.0 - xi[0]) * ((1.0 - xi[1]) * v00 + xi[1] * v01) +
          xi[0] * ((1.0 - xi[1]) * v10 + xi[1] * v11);
    if (clamp) {
      lo = std::min(std::min(v00, v01), std::min(v10, v11));
      hi = std::max(std::max(v00, v01), std::max(v10, v11));
    }
  } else {
    double w[3][2] = {{1.0 - xi[0], xi[0]},
                      {1.0 - xi[1], xi[1]},
                      {1.0 - xi[2], xi[2]}};
    for (int d0 = 0; d0 < 2; ++d0)
      for (int d1 = 0; d1 < 2; ++d1)
        for (int d2 = 0; d2 < 2; ++d2) {
          double v = f[g.flat(wrap_index(base[0] + d0, n),
                              wrap_index(base[1] + d1, n),
                              wrap_index(base[2] + d2, n))];
          acc += w[0][d0] * w[1][d1] * w[2][d2] * v;
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
  }
  if (clamp) acc = std::min(std::max(acc, lo), hi);
  return acc;
}

}  // namespace detail

/// Advective CFL number max|u| dt / h.
inline double cfl_number(const NodalField& u, double dt) {
  double umax2 = 0.0;
  for (std::size_t i = 0; i < u.comp[0].size(); ++i) {
    double s = 0.0;
    for (int a = 0; a < u.ncomp; ++a) s += u.comp[a][i] * u.comp[a][i];
    umax2 = std::max(umax2, s);
  }
  return std::sqrt(umax2) * dt / u.grid.min_spacing();
}

/// One backward-characteristic transport step of the density under a fixed
/// nodal velocity.
inline DensityField advance_density(const DensityField& rho,
                                    const NodalField& u, double dt) {
  require_same_grid(rho.grid, u.grid, "advance_density");
  if (u.ncomp != u.grid.dim)
    throw contract_error("advance_density: velocity component count mismatch");
  const Grid& g = rho.grid;
  const int n = g.n;
  double scale[3] = {0, 0, 0};
  for (int a = 0; a < g.dim; ++a) scale[a] = dt / g.spacing(a);

  DensityField out;
  out.grid = g;
  out.v.resize(rho.v.size());

  auto trace = [&](std::int64_t idx, const int* node) {
    // Midpoint rule: velocity at the node, then at the half-step position.
    double shalf[3], sfoot[3];
    for (int a = 0; a < g.dim; ++a)
      shalf[a] = node[a] - 0.5 * scale[a] * u.comp[a][idx];
    for (int a = 0; a < g.dim; ++a) {
      double uh = detail::interp_index(g, u.comp[a], shalf, false);
      sfoot[a] = node[a] - scale[a] * uh;
    }
    out.v[idx] = detail::interp_index(g, rho.v, sfoot, true);
  };

  if (g.dim == 2) {
    std::int64_t idx = 0;
    int node[3] = {0, 0, 0};
    for (node[0] = 0; node[0] < n; ++node[0])
      for (node[1] = 0; node[1] < n; ++node[1], ++idx) trace(idx, node);
  } else {
    std::int64_t idx = 0;
    int node[3] = {0, 0, 0};
    for (node[0] = 0; node[0] < n; ++node[0])
      for (node[1] = 0; node[1] < n; ++node[1])
        for (node[2] = 0; node[2] < n; ++node[2], ++idx) trace(idx, node);
  }
  return out;
}

/// Discrete Lq norm of the density, q in [1, inf].
inline double lq_norm(const DensityField& rho, double q) {
  if (q < 1.0) throw contract_error("lq_norm: q must be >= 1");
  if (std::isinf(q)) {
    double m = 0.0;
    for (double v : rho.v) m = std::max(m, std::abs(v));
    return m;
  }
  const double w = rho.grid.volume() / double(rho.grid.size());
  double s = 0.0;
  if (q == 1.0) {
    for (double v : rho.v) s += std::abs(v);
  } else if (q == 2.0) {
    for (double v : rho.v) s += v * v;
  } else {
    for (double v : rho.v) s += std::pow(std::abs(v), q);
  }
  return std::pow(s * w, 1.0 / q);
}

struct DensityBounds {
  double min;
  double max;
};

inline DensityBounds density_bounds(const DensityField& rho) {
  DensityBounds b{rho.v[0], rho.v[0]};
  for (double v : rho.v) {
    b.min = std::min(b.min, v);
    b.max = std::max(b.max, v);
  }
  return b;
}

}  // namespace nsv
