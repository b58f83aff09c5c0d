#pragma once
/// @file stability.hpp
/// @brief Two-solution stability monitor: difference energy and its
///        Gronwall-type majorant.
///
/// Two runs advance in lockstep; at every step boundary the monitor records
/// the difference energy
///   E = |sqrt(rho_a)(u_a - u_b)|_2^2 + kappa |grad(u_a - u_b)|_2^2
///       + |rho_a - rho_b|_2^2
/// and the majorant integrand
///   A = C (1 + |grad u_b|_inf^2 + |du_b/dt|_{2*}^2 + |grad rho_b|_inf^2),
/// where 2* is the Sobolev embedding exponent (4 in 2D, 6 in 3D).  The run
/// passes when E(t) never exceeds E(0) exp(int_0^t A).  C was calibrated
/// once on the reference vortex-over-vacuum-disk pairing (64^2 grid, 12
/// modes, mu=0.25, kappa=0.5, perturbations 1e-3 and 1e-4) and then frozen:
/// there the difference energy decays monotonically, so the smallest value
/// closing the bound is zero and any positive C verifies with margin.  The
/// frozen value 1.0 also dominates, by more than a factor of 40, twice the
/// largest constant demanded by low-viscosity probes with transient
/// difference growth (0.0122 at mu=0.02, kappa=0.05, amplitude 2).  Runs
/// only verify the constant; nothing recalibrates it.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "nsv/estimates.hpp"
#include "nsv/galerkin.hpp"

namespace nsv {

/// Frozen majorant scale; see the file header for its calibration record.
inline constexpr double kGronwallC = 1.0;

namespace detail {

/// Max over nodes of the Frobenius norm of grad u, via spectral derivatives.
inline double grad_velocity_sup(const SpectralField& uhat) {
  const Grid& g = uhat.grid;
  std::vector<double> frob_sq(g.size(), 0.0);
  std::vector<cplx> dspec(g.size());
  std::vector<double> dnod;
  for (int a = 0; a < g.dim; ++a)
    for (int b = 0; b < g.dim; ++b) {
      for_each_mode(g, [&](std::int64_t i, const double* k) {
        dspec[i] = cplx(0.0, k[b]) * uhat.comp[a][i];
      });
      fft_inverse(g, dspec, dnod);
      for (std::int64_t i = 0; i < g.size(); ++i)
        frob_sq[i] += dnod[i] * dnod[i];
    }
  double worst = 0.0;
  for (double v : frob_sq) worst = std::max(worst, v);
  return std::sqrt(worst);
}

/// Max over nodes of |grad rho| by second-order central differences.
inline double grad_density_sup(const DensityField& rho) {
  const Grid& g = rho.grid;
  const int n = g.n;
  auto wrap = [n](int v) { return (v % n + n) % n; };
  auto at = [&](int i0, int i1, int i2) {
    return rho.v[g.dim == 2 ? g.flat(wrap(i0), wrap(i1))
                            : g.flat(wrap(i0), wrap(i1), wrap(i2))];
  };
  double worst = 0.0;
  auto visit = [&](int i0, int i1, int i2) {
    double s = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      int d[3] = {0, 0, 0};
      d[a] = 1;
      double diff = (at(i0 + d[0], i1 + d[1], i2 + d[2]) -
                     at(i0 - d[0], i1 - d[1], i2 - d[2])) /
                    (2.0 * g.spacing(a));
      s += diff * diff;
    }
    worst = std::max(worst, s);
  };
  if (g.dim == 2) {
    for (int i0 = 0; i0 < n; ++i0)
      for (int i1 = 0; i1 < n; ++i1) visit(i0, i1, 0);
  } else {
    for (int i0 = 0; i0 < n; ++i0)
      for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2) visit(i0, i1, i2);
  }
  return std::sqrt(worst);
}

/// L^q norm of the pointwise magnitude of a nodal vector field.
inline double vector_lq_norm(const NodalField& u, double q) {
  const Grid& g = u.grid;
  const double w = g.volume() / double(g.size());
  double s = 0.0;
  for (std::int64_t i = 0; i < g.size(); ++i) {
    double m2 = 0.0;
    for (int a = 0; a < g.dim; ++a) m2 += u.comp[a][i] * u.comp[a][i];
    s += std::pow(m2, 0.5 * q);
  }
  return std::pow(s * w, 1.0 / q);
}

}  // namespace detail

/// Sobolev embedding exponent 2* for H^1 on a d-dimensional box.
inline double sobolev_exponent(int dim) { return dim == 2 ? 4.0 : 6.0; }

/// Difference energy of two states at the same instant, weighted by the
/// first state's density.
inline double difference_energy(const GalerkinState& a, const GalerkinState& b,
                                const StokesBasis& basis,
                                const FluidParams& prm) {
  require_same_grid(a.rho.grid, b.rho.grid, "difference_energy");
  if (a.c.size() != b.c.size())
    throw contract_error("difference_energy: coefficient counts differ");
  if (std::abs(a.t - b.t) > 1e-12)
    throw contract_error("difference_energy: states are at different times");
  Eigen::VectorXd dc = a.c - b.c;
  NodalField du = to_nodal(basis.reconstruct(dc));
  double e = detail::weighted_kinetic(a.rho, du);
  for (int i = 0; i < basis.size(); ++i)
    e += prm.kappa * basis.modes[i].k2_phys * dc[i] * dc[i];
  const double w = a.rho.grid.volume() / double(a.rho.grid.size());
  double drho = 0.0;
  for (std::size_t i = 0; i < a.rho.v.size(); ++i) {
    const double d = a.rho.v[i] - b.rho.v[i];
    drho += d * d;
  }
  return e + drho * w;
}

/// Majorant integrand from one state: C (1 + the three monitored norms).
inline double gronwall_integrand(const GalerkinState& s,
                                 const Eigen::VectorXd& c_dot,
                                 const StokesBasis& basis, double C) {
  SpectralField uhat = basis.reconstruct(s.c);
  const double gu = detail::grad_velocity_sup(uhat);
  NodalField ut = to_nodal(basis.reconstruct(c_dot));
  const double ut2s =
      detail::vector_lq_norm(ut, sobolev_exponent(basis.grid.dim));
  const double gr = detail::grad_density_sup(s.rho);
  return C * (1.0 + gu * gu + ut2s * ut2s + gr * gr);
}

struct GronwallSeries {
  std::vector<double> t;
  std::vector<double> energy;     // E at each step boundary
  std::vector<double> integrand;  // A at each step boundary
  std::vector<double> bound;      // E(0) exp(trapezoid int of A)
  double c_used = 0.0;
  bool pass = false;
};

/// Advance the perturbed run a and the base run b together and verify the
/// multiplicative bound.  Throws when E starts at exactly zero yet the runs
/// separate, which no admissible pair may do.
inline GronwallSeries gronwall_monitor(GalerkinState a, GalerkinState b,
                                       const StokesBasis& basis,
                                       const FluidParams& prm,
                                       const RunOptions& opts,
                                       double C = kGronwallC) {
  if (opts.dt <= 0.0 || opts.T <= 0.0)
    throw contract_error("gronwall_monitor: T and dt must be positive");
  const long nsteps = std::lround(opts.T / opts.dt);
  if (nsteps < 1 || std::abs(nsteps * opts.dt - opts.T) > 1e-9 * opts.T)
    throw contract_error("gronwall_monitor: T must be a whole number of steps");

  GronwallSeries out;
  out.c_used = C;
  const double t0 = a.t;
  double acc = 0.0;  // running trapezoid integral of A
  for (long i = 0; i <= nsteps; ++i) {
    detail::SystemOperator op_a(basis, prm, a.rho, opts.forcing);
    detail::SystemOperator op_b(basis, prm, b.rho, opts.forcing);
    const double e = difference_energy(a, b, basis, prm);
    const double A =
        gronwall_integrand(b, op_b.deriv(b.t, b.c), basis, C);
    if (i > 0) acc += 0.5 * opts.dt * (out.integrand.back() + A);
    out.t.push_back(a.t);
    out.energy.push_back(e);
    out.integrand.push_back(A);
    out.bound.push_back(out.energy.front() * std::exp(acc));
    if (i < nsteps) {
      a = detail::step_with(op_a, a, basis, opts.dt, opts.cfl_limit);
      b = detail::step_with(op_b, b, basis, opts.dt, opts.cfl_limit);
      a.t = t0 + (i + 1) * opts.dt;
      b.t = a.t;
    }
  }

  const double e0 = out.energy.front();
  if (e0 == 0.0) {
    for (double e : out.energy)
      if (e > 1e-24)
        throw numerical_error(
            "gronwall_monitor: identical initial data separated during the "
            "run; the difference system violated uniqueness");
    out.pass = true;
    return out;
  }
  out.pass = true;
  for (std::size_t i = 0; i < out.energy.size(); ++i)
    if (out.energy[i] > out.bound[i] * (1.0 + 1e-9)) out.pass = false;
  return out;
}

}  // namespace nsv
