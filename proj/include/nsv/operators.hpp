#pragma once
/// @file operators.hpp
/// @brief Coefficient-space operators: differentiation, Leray projection,
///        two-thirds dealiasing, and the Stokes operator.  All are diagonal
///        (or small-block) per wavevector, so each is a single sweep.

#include <cmath>

#include "nsv/field.hpp"

namespace nsv {

namespace detail {

/// Calls fn(flat_index, k_phys[3]) for every lattice point.
template <typename Fn>
inline void for_each_mode(const Grid& g, Fn&& fn) {
  double k[3] = {0.0, 0.0, 0.0};
  if (g.dim == 2) {
    std::int64_t idx = 0;
    for (int i0 = 0; i0 < g.n; ++i0) {
      k[0] = g.wavenumber(g.freq(i0), 0);
      for (int i1 = 0; i1 < g.n; ++i1, ++idx) {
        k[1] = g.wavenumber(g.freq(i1), 1);
        fn(idx, k);
      }
    }
  } else {
    std::int64_t idx = 0;
    for (int i0 = 0; i0 < g.n; ++i0) {
      k[0] = g.wavenumber(g.freq(i0), 0);
      for (int i1 = 0; i1 < g.n; ++i1) {
        k[1] = g.wavenumber(g.freq(i1), 1);
        for (int i2 = 0; i2 < g.n; ++i2, ++idx) {
          k[2] = g.wavenumber(g.freq(i2), 2);
          fn(idx, k);
        }
      }
    }
  }
}

/// Calls fn(flat_index, m_int[3]) with integer frequencies.
template <typename Fn>
inline void for_each_mode_int(const Grid& g, Fn&& fn) {
  int m[3] = {0, 0, 0};
  if (g.dim == 2) {
    std::int64_t idx = 0;
    for (int i0 = 0; i0 < g.n; ++i0) {
      m[0] = g.freq(i0);
      for (int i1 = 0; i1 < g.n; ++i1, ++idx) {
        m[1] = g.freq(i1);
        fn(idx, m);
      }
    }
  } else {
    std::int64_t idx = 0;
    for (int i0 = 0; i0 < g.n; ++i0) {
      m[0] = g.freq(i0);
      for (int i1 = 0; i1 < g.n; ++i1) {
        m[1] = g.freq(i1);
        for (int i2 = 0; i2 < g.n; ++i2, ++idx) {
          m[2] = g.freq(i2);
          fn(idx, m);
        }
      }
    }
  }
}

}  // namespace detail

/// Gradient of a scalar: d components, (grad f)_a = i k_a f.
inline SpectralField gradient(const SpectralField& f) {
  if (f.ncomp != 1) throw contract_error("gradient: expects a scalar field");
  SpectralField out = SpectralField::zeros(f.grid, f.grid.dim);
  detail::for_each_mode(f.grid, [&](std::int64_t i, const double* k) {
    const cplx v = f.comp[0][i];
    for (int a = 0; a < f.grid.dim; ++a)
      out.comp[a][i] = cplx(0.0, k[a]) * v;
  });
  return out;
}

/// Divergence of a vector field: scalar i k . u.
inline SpectralField divergence(const SpectralField& u) {
  if (u.ncomp != u.grid.dim)
    throw contract_error("divergence: expects a velocity-shaped field");
  SpectralField out = SpectralField::zeros(u.grid, 1);
  detail::for_each_mode(u.grid, [&](std::int64_t i, const double* k) {
    cplx s(0.0, 0.0);
    for (int a = 0; a < u.grid.dim; ++a) s += cplx(0.0, k[a]) * u.comp[a][i];
    out.comp[0][i] = s;
  });
  return out;
}

/// Componentwise Laplacian, -(|k|^2).
inline SpectralField laplacian(const SpectralField& f) {
  SpectralField out = SpectralField::zeros(f.grid, f.ncomp);
  detail::for_each_mode(f.grid, [&](std::int64_t i, const double* k) {
    double k2 = 0.0;
    for (int a = 0; a < f.grid.dim; ++a) k2 += k[a] * k[a];
    for (int c = 0; c < f.ncomp; ++c) out.comp[c][i] = -k2 * f.comp[c][i];
  });
  return out;
}

/// Leray projection onto divergence-free fields, v -> v - k (k.v)/|k|^2
/// per mode; the k = 0 (mean) mode passes through unchanged.
inline SpectralField leray_project(const SpectralField& u) {
  if (u.ncomp != u.grid.dim)
    throw contract_error("leray_project: expects a velocity-shaped field");
  SpectralField out = u;
  detail::for_each_mode(u.grid, [&](std::int64_t i, const double* k) {
    double k2 = 0.0;
    for (int a = 0; a < u.grid.dim; ++a) k2 += k[a] * k[a];
    if (k2 == 0.0) return;
    cplx kv(0.0, 0.0);
    for (int a = 0; a < u.grid.dim; ++a) kv += k[a] * u.comp[a][i];
    kv /= k2;
    for (int a = 0; a < u.grid.dim; ++a) out.comp[a][i] -= k[a] * kv;
  });
  return out;
}

/// Zeroes every coefficient with any |m_a| > n/3 (two-thirds rule).
inline SpectralField dealias(const SpectralField& f) {
  SpectralField out = f;
  const int cut = f.grid.dealias_cutoff();
  detail::for_each_mode_int(f.grid, [&](std::int64_t i, const int* m) {
    for (int a = 0; a < f.grid.dim; ++a) {
      if (m[a] > cut || m[a] < -cut) {
        for (int c = 0; c < f.ncomp; ++c) out.comp[c][i] = cplx(0.0);
        return;
      }
    }
  });
  return out;
}

/// Stokes operator -mu P(Laplacian .): projects first, then scales each mode
/// by mu |k|^2.  On an eigenmode this is multiplication by its eigenvalue.
inline SpectralField stokes_apply(const SpectralField& u, double mu) {
  SpectralField out = leray_project(u);
  detail::for_each_mode(u.grid, [&](std::int64_t i, const double* k) {
    double k2 = 0.0;
    for (int a = 0; a < u.grid.dim; ++a) k2 += k[a] * k[a];
    for (int c = 0; c < out.ncomp; ++c) out.comp[c][i] *= mu * k2;
  });
  return out;
}

/// Max pointwise |div u| over nodes, for divergence-free diagnostics.
inline double max_nodal_divergence(const SpectralField& u) {
  NodalField d = to_nodal(divergence(u));
  double worst = 0.0;
  for (double v : d.comp[0]) worst = std::max(worst, std::abs(v));
  return worst;
}

}  // namespace nsv
