#pragma once
/// @file field.hpp
/// @brief Field containers: spectral (complex coefficients) and nodal (real
///        samples) representations, plus transforms and inner products.
///
/// Spectral storage covers the full integer lattice [-n/2, n/2)^d; fields
/// built from real nodal data keep Hermitian symmetry up to roundoff.

#include <complex>
#include <vector>

#include "nsv/fft.hpp"
#include "nsv/grid.hpp"

namespace nsv {

/// Vector or scalar field in coefficient space (ncomp = dim for velocity,
/// 1 for pressure-like scalars).
struct SpectralField {
  Grid grid;
  int ncomp = 0;
  std::array<std::vector<cplx>, 3> comp;

  static SpectralField zeros(const Grid& g, int ncomp) {
    SpectralField f;
    f.grid = g;
    f.ncomp = ncomp;
    for (int c = 0; c < ncomp; ++c) f.comp[c].assign(g.size(), cplx(0.0));
    return f;
  }
};

/// Real samples at the grid nodes.
struct NodalField {
  Grid grid;
  int ncomp = 0;
  std::array<std::vector<double>, 3> comp;

  static NodalField zeros(const Grid& g, int ncomp) {
    NodalField f;
    f.grid = g;
    f.ncomp = ncomp;
    for (int c = 0; c < ncomp; ++c) f.comp[c].assign(g.size(), 0.0);
    return f;
  }
};

/// Nodal real density.  Stored separately from NodalField because it obeys
/// different rules (transported pointwise, never dealiased).
struct DensityField {
  Grid grid;
  std::vector<double> v;

  static DensityField constant(const Grid& g, double value) {
    DensityField r;
    r.grid = g;
    r.v.assign(g.size(), value);
    return r;
  }
};

inline SpectralField to_spectral(const NodalField& f) {
  SpectralField s;
  s.grid = f.grid;
  s.ncomp = f.ncomp;
  for (int c = 0; c < f.ncomp; ++c) fft_forward(f.grid, f.comp[c], s.comp[c]);
  return s;
}

inline NodalField to_nodal(const SpectralField& s) {
  NodalField f;
  f.grid = s.grid;
  f.ncomp = s.ncomp;
  for (int c = 0; c < s.ncomp; ++c) fft_inverse(s.grid, s.comp[c], f.comp[c]);
  return f;
}

inline SpectralField density_spectrum(const DensityField& rho) {
  SpectralField s;
  s.grid = rho.grid;
  s.ncomp = 1;
  fft_forward(rho.grid, rho.v, s.comp[0]);
  return s;
}

/// Discrete L2 inner product of nodal fields: sum over nodes times h^d.
inline double inner(const NodalField& a, const NodalField& b) {
  require_same_grid(a.grid, b.grid, "inner");
  if (a.ncomp != b.ncomp) throw contract_error("inner: component mismatch");
  const double w = a.grid.volume() / double(a.grid.size());
  double s = 0.0;
  for (int c = 0; c < a.ncomp; ++c) {
    const auto& x = a.comp[c];
    const auto& y = b.comp[c];
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  }
  return s * w;
}

/// Parseval form of the L2 norm squared, |Omega| * sum |c_k|^2.
inline double l2_norm_sq(const SpectralField& f) {
  double s = 0.0;
  for (int c = 0; c < f.ncomp; ++c)
    for (const cplx& z : f.comp[c]) s += std::norm(z);
  return s * f.grid.volume();
}

inline double l2_norm_sq(const NodalField& f) { return inner(f, f); }

/// Largest Hermitian-symmetry violation |c(k) - conj(c(-k))| over all modes.
inline double hermitian_defect(const SpectralField& f) {
  const Grid& g = f.grid;
  double worst = 0.0;
  const int n = g.n;
  auto wrap = [n](int i) { return i == 0 ? 0 : n - i; };
  for (int c = 0; c < f.ncomp; ++c) {
    for (int i0 = 0; i0 < n; ++i0)
      for (int i1 = 0; i1 < n; ++i1) {
        if (g.dim == 2) {
          cplx d = f.comp[c][g.flat(i0, i1)] -
                   std::conj(f.comp[c][g.flat(wrap(i0), wrap(i1))]);
          worst = std::max(worst, std::abs(d));
        } else {
          for (int i2 = 0; i2 < n; ++i2) {
            cplx d = f.comp[c][g.flat(i0, i1, i2)] -
                     std::conj(f.comp[c][g.flat(wrap(i0), wrap(i1), wrap(i2))]);
            worst = std::max(worst, std::abs(d));
          }
        }
      }
  }
  return worst;
}

}  // namespace nsv
