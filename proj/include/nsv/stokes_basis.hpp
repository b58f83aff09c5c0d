#pragma once
/// @file stokes_basis.hpp
/// @brief Divergence-free trigonometric basis on the periodic box.  Each mode
///        is a unit polarization vector times cos or sin of k.x, normalized
///        in discrete L2; the Stokes operator acts diagonally with eigenvalue
///        mu |k|^2.
///
/// Mode ordering is deterministic: nondecreasing |k|^2, then lexicographic
/// canonical wavevector, then polarization index, then cos before sin.
/// Canonical means the first nonzero component of k is positive.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "nsv/field.hpp"
#include "nsv/operators.hpp"

namespace nsv {

struct StokesMode {
  std::array<int, 3> k = {0, 0, 0};  // canonical integer wavevector
  int k2 = 0;                        // |k|^2 in integer units
  int pol = 0;                       // polarization index, 0..d-2
  int trig = 0;                      // 0 = cos, 1 = sin
  std::array<double, 3> e = {0, 0, 0};  // unit polarization vector
  double lambda = 0.0;               // Stokes eigenvalue mu |k_phys|^2
  double k2_phys = 0.0;              // |k_phys|^2
  std::int64_t kidx = 0;             // flat lattice index of +k
  std::array<cplx, 3> coeff = {};    // spectral coefficient at +k, per comp
};

struct StokesBasis {
  Grid grid;
  double mu = 0.0;
  std::vector<StokesMode> modes;
  std::vector<NodalField> nodal;  // cached nodal samples of each mode

  int size() const { return int(modes.size()); }

  /// Synthesize the velocity field of a coefficient vector.
  SpectralField reconstruct(const Eigen::VectorXd& c) const {
    SpectralField u = SpectralField::zeros(grid, grid.dim);
    reconstruct_into(c, u);
    return u;
  }

  /// Same synthesis into caller-owned storage, for allocation-free loops.
  void reconstruct_into(const Eigen::VectorXd& c, SpectralField& u) const {
    if (c.size() != size())
      throw contract_error("reconstruct: coefficient count != basis size");
    u.grid = grid;
    u.ncomp = grid.dim;
    for (int a = 0; a < grid.dim; ++a)
      u.comp[a].assign(static_cast<std::size_t>(grid.size()), cplx(0.0));
    for (int i = 0; i < size(); ++i) {
      const StokesMode& m = modes[i];
      std::int64_t neg = negative_index(m);
      for (int a = 0; a < grid.dim; ++a) {
        cplx w = c[i] * m.coeff[a];
        u.comp[a][m.kidx] += w;
        u.comp[a][neg] += std::conj(w);
      }
    }
  }

  /// Inner product of a real (Hermitian) field with one basis mode.
  double inner_with_mode(const SpectralField& f, int i) const {
    const StokesMode& m = modes[i];
    double s = 0.0;
    for (int a = 0; a < grid.dim; ++a)
      s += (f.comp[a][m.kidx] * std::conj(m.coeff[a])).real();
    return 2.0 * grid.volume() * s;
  }

  /// Galerkin projection: coefficients of the best approximation in the span.
  Eigen::VectorXd project(const SpectralField& f) const {
    require_same_grid(grid, f.grid, "StokesBasis::project");
    Eigen::VectorXd c(size());
    for (int i = 0; i < size(); ++i) c[i] = inner_with_mode(f, i);
    return c;
  }

  std::int64_t negative_index(const StokesMode& m) const {
    const int n = grid.n;
    auto wrap = [n](int v) { return ((-v) % n + n) % n; };
    return grid.dim == 2 ? grid.flat(wrap(m.k[0]), wrap(m.k[1]))
                         : grid.flat(wrap(m.k[0]), wrap(m.k[1]), wrap(m.k[2]));
  }
};

namespace detail {

inline bool canonical_wavevector(const int* k, int dim) {
  for (int a = 0; a < dim; ++a) {
    if (k[a] > 0) return true;
    if (k[a] < 0) return false;
  }
  return false;  // zero vector is not a basis wavevector
}

/// Deterministic orthonormal polarization frame perpendicular to k.
inline void polarization_vectors(const std::array<double, 3>& kphys, int dim,
                                 std::array<double, 3>* e1,
                                 std::array<double, 3>* e2) {
  if (dim == 2) {
    double nrm = std::hypot(kphys[0], kphys[1]);
    (*e1) = {-kphys[1] / nrm, kphys[0] / nrm, 0.0};
    return;
  }
  double nrm = std::sqrt(kphys[0] * kphys[0] + kphys[1] * kphys[1] +
                         kphys[2] * kphys[2]);
  std::array<double, 3> kh = {kphys[0] / nrm, kphys[1] / nrm, kphys[2] / nrm};
  // Reference axis: the one least aligned with k, lowest index on ties.
  int ref = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(kh[a]) < std::abs(kh[ref])) ref = a;
  std::array<double, 3> r = {0, 0, 0};
  r[ref] = 1.0;
  // e1 = normalize(r x kh), e2 = kh x e1.
  std::array<double, 3> c = {r[1] * kh[2] - r[2] * kh[1],
                             r[2] * kh[0] - r[0] * kh[2],
                             r[0] * kh[1] - r[1] * kh[0]};
  double cn = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
  (*e1) = {c[0] / cn, c[1] / cn, c[2] / cn};
  (*e2) = {kh[1] * (*e1)[2] - kh[2] * (*e1)[1],
           kh[2] * (*e1)[0] - kh[0] * (*e1)[2],
           kh[0] * (*e1)[1] - kh[1] * (*e1)[0]};
}

}  // namespace detail

/// Number of basis modes available inside the dealiased band.
inline int basis_capacity(const Grid& g) {
  const int cut = g.dealias_cutoff();
  int count = 0;
  int lo = -cut, hi = cut;
  int k[3] = {0, 0, 0};
  for (k[0] = lo; k[0] <= hi; ++k[0])
    for (k[1] = lo; k[1] <= hi; ++k[1]) {
      if (g.dim == 2) {
        if (detail::canonical_wavevector(k, 2)) ++count;
      } else {
        for (k[2] = lo; k[2] <= hi; ++k[2])
          if (detail::canonical_wavevector(k, 3)) ++count;
      }
    }
  return count * 2 * (g.dim - 1);  // two trig phases per polarization
}

/// Build the first j modes of the ordered basis.
inline StokesBasis build_basis(const Grid& g, double mu, int j) {
  if (j < 1) throw contract_error("build_basis: j must be >= 1");
  const int cap = basis_capacity(g);
  if (j > cap)
    throw capacity_error("build_basis: requested " + std::to_string(j) +
                             " modes but the dealiased lattice provides " +
                             std::to_string(cap),
                         j, cap);

  struct Seed {
    std::array<int, 3> k;
    int k2;
  };
  std::vector<Seed> seeds;
  const int cut = g.dealias_cutoff();
  int k[3] = {0, 0, 0};
  for (k[0] = -cut; k[0] <= cut; ++k[0])
    for (k[1] = -cut; k[1] <= cut; ++k[1]) {
      if (g.dim == 2) {
        if (detail::canonical_wavevector(k, 2))
          seeds.push_back({{k[0], k[1], 0}, k[0] * k[0] + k[1] * k[1]});
      } else {
        for (k[2] = -cut; k[2] <= cut; ++k[2])
          if (detail::canonical_wavevector(k, 3))
            seeds.push_back({{k[0], k[1], k[2]},
                             k[0] * k[0] + k[1] * k[1] + k[2] * k[2]});
      }
    }
  std::sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) {
    if (a.k2 != b.k2) return a.k2 < b.k2;
    return a.k < b.k;
  });

  StokesBasis basis;
  basis.grid = g;
  basis.mu = mu;
  basis.modes.reserve(j);
  const double alpha = 1.0 / std::sqrt(2.0 * g.volume());  // |coeff| per side

  for (const Seed& s : seeds) {
    if (int(basis.modes.size()) >= j) break;
    std::array<double, 3> kphys = {0, 0, 0};
    for (int a = 0; a < g.dim; ++a) kphys[a] = g.wavenumber(s.k[a], a);
    double k2p = 0.0;
    for (int a = 0; a < g.dim; ++a) k2p += kphys[a] * kphys[a];
    std::array<double, 3> e1, e2;
    detail::polarization_vectors(kphys, g.dim, &e1, &e2);
    for (int pol = 0; pol < g.dim - 1 && int(basis.modes.size()) < j; ++pol) {
      const std::array<double, 3>& e = (pol == 0) ? e1 : e2;
      for (int trig = 0; trig < 2 && int(basis.modes.size()) < j; ++trig) {
        StokesMode m;
        m.k = s.k;
        m.k2 = s.k2;
        m.pol = pol;
        m.trig = trig;
        m.e = e;
        m.k2_phys = k2p;
        m.lambda = mu * k2p;
        const int n = g.n;
        auto wrapi = [n](int v) { return (v % n + n) % n; };
        m.kidx = g.dim == 2
                     ? g.flat(wrapi(s.k[0]), wrapi(s.k[1]))
                     : g.flat(wrapi(s.k[0]), wrapi(s.k[1]), wrapi(s.k[2]));
        // cos: alpha at both +/-k.  sin: -i alpha at +k.
        cplx base = (trig == 0) ? cplx(alpha, 0.0) : cplx(0.0, -alpha);
        for (int a = 0; a < g.dim; ++a) m.coeff[a] = base * e[a];
        basis.modes.push_back(m);
      }
    }
  }

  // Nodal samples, used by quadrature and diagnostics.
  basis.nodal.reserve(basis.modes.size());
  const double amp = std::sqrt(2.0 / g.volume());
  for (const StokesMode& m : basis.modes) {
    NodalField f = NodalField::zeros(g, g.dim);
    const int n = g.n;
    if (g.dim == 2) {
      std::int64_t idx = 0;
      for (int i0 = 0; i0 < n; ++i0)
        for (int i1 = 0; i1 < n; ++i1, ++idx) {
          double theta = kTwoPi * (double(m.k[0]) * i0 + double(m.k[1]) * i1) /
                         double(n);
          double v = amp * (m.trig == 0 ? std::cos(theta) : std::sin(theta));
          for (int a = 0; a < 2; ++a) f.comp[a][idx] = m.e[a] * v;
        }
    } else {
      std::int64_t idx = 0;
      for (int i0 = 0; i0 < n; ++i0)
        for (int i1 = 0; i1 < n; ++i1)
          for (int i2 = 0; i2 < n; ++i2, ++idx) {
            double theta = kTwoPi *
                           (double(m.k[0]) * i0 + double(m.k[1]) * i1 +
                            double(m.k[2]) * i2) /
                           double(n);
            double v = amp * (m.trig == 0 ? std::cos(theta) : std::sin(theta));
            for (int a = 0; a < 3; ++a) f.comp[a][idx] = m.e[a] * v;
          }
    }
    basis.nodal.push_back(std::move(f));
  }
  return basis;
}

}  // namespace nsv
