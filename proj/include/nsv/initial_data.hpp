#pragma once
/// @file initial_data.hpp
/// @brief Approximation layer for rough initial data: discrete Friedrichs
///        mollification, the positive density lift rho -> eta_n * rho + 1/n,
///        vacuum-region density profiles, velocity presets, and projection of
///        initial velocities onto the divergence-free basis.
///
/// The mollifier kernel is the standard bump exp(-1/(1-s^2)) scaled to radius
/// 1/n in box coordinates and normalized so its discrete weights sum to one;
/// mollification is then a convex combination of nodal values, which makes
/// the output range nest inside the input range exactly.  The index n = 0 is
/// accepted as "no approximation": mollification becomes the identity and the
/// lift adds nothing.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "nsv/field.hpp"
#include "nsv/operators.hpp"
#include "nsv/stokes_basis.hpp"

namespace nsv {

namespace detail {

struct KernelTap {
  int off[3];
  double w;
};

/// Discrete radial bump of radius 1/n, weights normalized to unit sum.
inline std::vector<KernelTap> mollifier_taps(const Grid& g, int n) {
  const double r = 1.0 / n;
  if (r < g.min_spacing())
    throw contract_error(
        "mollify: kernel radius 1/n is below the grid spacing; refine the "
        "grid or lower n");
  std::vector<KernelTap> taps;
  int ext[3] = {0, 0, 0};
  for (int a = 0; a < g.dim; ++a) ext[a] = int(std::floor(r / g.spacing(a)));
  double sum = 0.0;
  int o[3] = {0, 0, 0};
  int lo2 = g.dim == 3 ? -ext[2] : 0, hi2 = g.dim == 3 ? ext[2] : 0;
  for (o[0] = -ext[0]; o[0] <= ext[0]; ++o[0])
    for (o[1] = -ext[1]; o[1] <= ext[1]; ++o[1])
      for (o[2] = lo2; o[2] <= hi2; ++o[2]) {
        double s2 = 0.0;
        for (int a = 0; a < g.dim; ++a) {
          double x = o[a] * g.spacing(a) / r;
          s2 += x * x;
        }
        if (s2 >= 1.0) continue;
        double w = std::exp(-1.0 / (1.0 - s2));
        taps.push_back({{o[0], o[1], o[2]}, w});
        sum += w;
      }
  for (KernelTap& t : taps) t.w /= sum;
  return taps;
}

inline void convolve(const Grid& g, const std::vector<KernelTap>& taps,
                     const std::vector<double>& in, std::vector<double>& out) {
  const int n = g.n;
  out.resize(in.size());
  auto wrap = [n](int v) { return (v % n + n) % n; };
  auto run_node = [&](std::int64_t idx, int i0, int i1, int i2) {
    double acc = 0.0;
    double lo = in[idx], hi = in[idx];
    for (const KernelTap& t : taps) {
      double v =
          g.dim == 2
              ? in[g.flat(wrap(i0 + t.off[0]), wrap(i1 + t.off[1]))]
              : in[g.flat(wrap(i0 + t.off[0]), wrap(i1 + t.off[1]),
                          wrap(i2 + t.off[2]))];
      acc += t.w * v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    // Clamp to the stencil range so roundoff cannot leak outside it.
    out[idx] = std::min(std::max(acc, lo), hi);
  };
  if (g.dim == 2) {
    std::int64_t idx = 0;
    for (int i0 = 0; i0 < n; ++i0)
      for (int i1 = 0; i1 < n; ++i1, ++idx) run_node(idx, i0, i1, 0);
  } else {
    std::int64_t idx = 0;
    for (int i0 = 0; i0 < n; ++i0)
      for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2, ++idx) run_node(idx, i0, i1, i2);
  }
}

}  // namespace detail

/// Mollify a nodal scalar; n = 0 returns the input unchanged.
inline DensityField mollify(const DensityField& rho, int n) {
  if (n == 0) return rho;
  if (n < 0) throw contract_error("mollify: n must be >= 0");
  auto taps = detail::mollifier_taps(rho.grid, n);
  DensityField out;
  out.grid = rho.grid;
  detail::convolve(rho.grid, taps, rho.v, out.v);
  return out;
}

/// Mollify each component of a nodal vector field.
inline NodalField mollify(const NodalField& f, int n) {
  if (n == 0) return f;
  if (n < 0) throw contract_error("mollify: n must be >= 0");
  auto taps = detail::mollifier_taps(f.grid, n);
  NodalField out = NodalField::zeros(f.grid, f.ncomp);
  for (int c = 0; c < f.ncomp; ++c)
    detail::convolve(f.grid, taps, f.comp[c], out.comp[c]);
  return out;
}

/// Positive lift of a nonnegative bounded density: mollify, then add 1/n.
/// The result satisfies 1/n <= rho <= M + 1/n exactly (n >= 1).
inline DensityField lift_density(const DensityField& rho0, int n, double M) {
  double lo = rho0.v.empty() ? 0.0 : rho0.v[0], hi = lo;
  for (double v : rho0.v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo < 0.0 || hi > M)
    throw contract_error("lift_density: initial density outside [0, M], range [" +
                         std::to_string(lo) + ", " + std::to_string(hi) + "]");
  DensityField out = mollify(rho0, n);
  if (n > 0) {
    const double lift = 1.0 / n;
    for (double& v : out.v) v += lift;
  }
  return out;
}

/// Vacuum-region shapes for initial densities.
enum class VacuumShape { kDisk, kAnnulus, kStripe, kFullBox };

struct VacuumRegion {
  VacuumShape shape = VacuumShape::kDisk;
  double radius = 1.0;        // disk radius / stripe half-width
  double radius_outer = 2.0;  // annulus outer radius
  double ramp = 0.4;          // transition width to the bulk value
};

namespace detail {

/// Quintic smoothstep: C2, 0 below 0, 1 above 1.
inline double smoothstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (t * (t * 6.0 - 15.0) + 10.0);
}

inline double periodic_dist(double x, double c, double len) {
  double d = std::fmod(std::abs(x - c), len);
  return std::min(d, len - d);
}

}  // namespace detail

/// Density M outside a vacuum region, 0 inside, smooth ramp between; the
/// full-box shape gives identically zero density (total vacuum).
inline DensityField make_vacuum_density(const Grid& g, const VacuumRegion& reg,
                                        double M) {
  DensityField rho;
  rho.grid = g;
  rho.v.assign(g.size(), 0.0);
  if (reg.shape == VacuumShape::kFullBox) return rho;
  if (reg.ramp <= 0.0)
    throw contract_error("make_vacuum_density: ramp width must be positive");
  std::array<double, 3> c = {0.5 * g.length[0], 0.5 * g.length[1],
                             0.5 * g.length[2]};
  const int n = g.n;
  std::int64_t idx = 0;
  auto value = [&](double* x) {
    double d = 0.0;
    if (reg.shape == VacuumShape::kStripe) {
      d = detail::periodic_dist(x[0], c[0], g.length[0]);
    } else {
      double s = 0.0;
      for (int a = 0; a < g.dim; ++a) {
        double da = detail::periodic_dist(x[a], c[a], g.length[a]);
        s += da * da;
      }
      d = std::sqrt(s);
    }
    if (reg.shape == VacuumShape::kAnnulus) {
      double inner = detail::smoothstep((reg.radius - d) / reg.ramp);
      double outer = detail::smoothstep((d - reg.radius_outer) / reg.ramp);
      return M * std::max(inner, outer);
    }
    return M * detail::smoothstep((d - reg.radius) / reg.ramp);
  };
  double x[3] = {0, 0, 0};
  if (g.dim == 2) {
    for (int i0 = 0; i0 < n; ++i0)
      for (int i1 = 0; i1 < n; ++i1, ++idx) {
        x[0] = i0 * g.spacing(0);
        x[1] = i1 * g.spacing(1);
        rho.v[idx] = value(x);
      }
  } else {
    for (int i0 = 0; i0 < n; ++i0)
      for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2, ++idx) {
          x[0] = i0 * g.spacing(0);
          x[1] = i1 * g.spacing(1);
          x[2] = i2 * g.spacing(2);
          rho.v[idx] = value(x);
        }
  }
  return rho;
}

/// Project a mean-zero velocity onto the span of the basis.
inline Eigen::VectorXd project_velocity(const SpectralField& u,
                                        const StokesBasis& basis) {
  require_same_grid(u.grid, basis.grid, "project_velocity");
  if (u.ncomp != u.grid.dim)
    throw contract_error("project_velocity: expects a velocity-shaped field");
  double mean = 0.0;
  for (int a = 0; a < u.ncomp; ++a) mean = std::max(mean, std::abs(u.comp[a][0]));
  if (mean > 1e-12)
    throw contract_error(
        "project_velocity: input has a nonzero mean component");
  return basis.project(dealias(leray_project(u)));
}

/// Built-in initial velocity profiles.
enum class VelocityPreset { kSingleMode, kTaylorGreen, kRandomSeeded };

inline NodalField velocity_preset(const Grid& g, VelocityPreset kind,
                                  double amplitude, std::uint64_t seed = 0) {
  NodalField u = NodalField::zeros(g, g.dim);
  const int n = g.n;
  auto fill = [&](auto&& fn) {
    std::int64_t idx = 0;
    if (g.dim == 2) {
      for (int i0 = 0; i0 < n; ++i0)
        for (int i1 = 0; i1 < n; ++i1, ++idx)
          fn(idx, i0 * g.spacing(0), i1 * g.spacing(1), 0.0);
    } else {
      for (int i0 = 0; i0 < n; ++i0)
        for (int i1 = 0; i1 < n; ++i1)
          for (int i2 = 0; i2 < n; ++i2, ++idx)
            fn(idx, i0 * g.spacing(0), i1 * g.spacing(1), i2 * g.spacing(2));
    }
  };
  switch (kind) {
    case VelocityPreset::kSingleMode:
      // Plane shear along x varying in y; an exact Stokes eigenmode.
      fill([&](std::int64_t i, double, double y, double) {
        u.comp[0][i] = amplitude * std::cos(y);
      });
      break;
    case VelocityPreset::kTaylorGreen:
      if (g.dim == 2) {
        fill([&](std::int64_t i, double x, double y, double) {
          u.comp[0][i] = amplitude * std::cos(x) * std::sin(y);
          u.comp[1][i] = -amplitude * std::sin(x) * std::cos(y);
        });
      } else {
        fill([&](std::int64_t i, double x, double y, double z) {
          u.comp[0][i] = amplitude * std::sin(x) * std::cos(y) * std::cos(z);
          u.comp[1][i] = -amplitude * std::cos(x) * std::sin(y) * std::cos(z);
        });
      }
      break;
    case VelocityPreset::kRandomSeeded: {
      // Random coefficients on the lowest two shells of the solenoidal basis.
      StokesBasis b = build_basis(g, 1.0, 8);
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> dist(0.0, 1.0);
      Eigen::VectorXd c(8);
      for (int i = 0; i < 8; ++i) c[i] = amplitude * dist(rng);
      u = to_nodal(b.reconstruct(c));
      break;
    }
  }
  return u;
}

}  // namespace nsv
