#pragma once
/// @file pressure.hpp
/// @brief Pressure recovery from the momentum residual.
///
/// The Galerkin system never sees the pressure; it is recovered afterwards
/// from the momentum balance.  With
///   R = rho (f - u_t - (u.grad)u) + mu Lap u + kappa Lap u_t
/// the pressure solves Lap p = div R with zero mean, i.e. grad p is the
/// gradient part of R.  The leftover |R - grad p| measures how much of the
/// residual the recovered gradient cannot represent.

#include "nsv/galerkin.hpp"

namespace nsv {

/// Band-limited momentum residual R at the state's instant.  c_dot must be
/// the coefficient derivative from the mass-matrix solve at the same state.
inline SpectralField momentum_residual(const GalerkinState& s,
                                       const StokesBasis& basis,
                                       const FluidParams& prm,
                                       const Eigen::VectorXd& c_dot,
                                       const Forcing* forcing = nullptr) {
  require_same_grid(basis.grid, s.rho.grid, "momentum_residual");
  const Grid& g = basis.grid;
  SpectralField uhat = basis.reconstruct(s.c);
  SpectralField ut_hat = basis.reconstruct(c_dot);
  NodalField u = to_nodal(uhat);
  NodalField ut = to_nodal(ut_hat);
  static thread_local detail::ConvectionScratch ws;
  const NodalField& conv = detail::dealiased_convection(uhat, u, ws);

  SpectralField rho_hat = dealias(density_spectrum(s.rho));
  std::vector<double> rho_t;
  fft_inverse(g, rho_hat.comp[0], rho_t);

  NodalField f = NodalField::zeros(g, g.dim);
  if (forcing && forcing->active()) forcing->eval(s.t, f);

  NodalField m = NodalField::zeros(g, g.dim);
  for (int a = 0; a < g.dim; ++a) {
    auto& out = m.comp[a];
    const auto& fa = f.comp[a];
    const auto& uta = ut.comp[a];
    const auto& cva = conv.comp[a];
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = rho_t[i] * (fa[i] - uta[i] - cva[i]);
  }
  SpectralField R = to_spectral(m);
  detail::for_each_mode(g, [&](std::int64_t i, const double* k) {
    double k2 = 0.0;
    for (int a = 0; a < g.dim; ++a) k2 += k[a] * k[a];
    for (int a = 0; a < g.dim; ++a)
      R.comp[a][i] += -k2 * (prm.mu * uhat.comp[a][i] +
                             prm.kappa * ut_hat.comp[a][i]);
  });
  return dealias(R);
}

/// Zero-mean solution of Lap p = div R, mode by mode.  Linear in R.
inline SpectralField pressure_from_residual(const SpectralField& R) {
  if (R.ncomp != R.grid.dim)
    throw contract_error("pressure_from_residual: expects a vector field");
  SpectralField d = divergence(R);
  SpectralField p = SpectralField::zeros(R.grid, 1);
  detail::for_each_mode(R.grid, [&](std::int64_t i, const double* k) {
    double k2 = 0.0;
    for (int a = 0; a < R.grid.dim; ++a) k2 += k[a] * k[a];
    p.comp[0][i] = (k2 == 0.0) ? cplx(0.0) : d.comp[0][i] / cplx(-k2, 0.0);
  });
  return p;
}

/// Recovered pressure at the state's instant.
inline SpectralField recover_pressure(const GalerkinState& s,
                                      const StokesBasis& basis,
                                      const FluidParams& prm,
                                      const Eigen::VectorXd& c_dot,
                                      const Forcing* forcing = nullptr) {
  return pressure_from_residual(
      momentum_residual(s, basis, prm, c_dot, forcing));
}

/// L2 norm of grad p, sqrt(|Omega| sum |k|^2 |p_k|^2).
inline double pressure_gradient_norm(const SpectralField& p) {
  return std::sqrt(l2_norm_sq(gradient(p)));
}

/// L2 norm of R - grad p: the part of the momentum residual the pressure
/// gradient cannot account for.  Near zero when the dynamics stays inside
/// the basis span.
inline double voigt_stokes_check(const GalerkinState& s,
                                 const StokesBasis& basis,
                                 const FluidParams& prm,
                                 const Eigen::VectorXd& c_dot,
                                 const Forcing* forcing = nullptr) {
  SpectralField R = momentum_residual(s, basis, prm, c_dot, forcing);
  SpectralField gp = gradient(pressure_from_residual(R));
  for (int a = 0; a < R.grid.dim; ++a)
    for (std::size_t i = 0; i < R.comp[a].size(); ++i)
      R.comp[a][i] -= gp.comp[a][i];
  return std::sqrt(l2_norm_sq(R));
}

}  // namespace nsv
