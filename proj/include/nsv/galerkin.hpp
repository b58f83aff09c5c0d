#pragma once
/// @file galerkin.hpp
/// @brief Density-coupled Galerkin system for the velocity coefficients.
///
/// Semidiscrete form: for basis modes psi_i,
///   sum_l [ <rho psi_l, psi_i> + kappa <grad psi_l, grad psi_i> ] c_l'
///     = <rho f, psi_i> - <rho (u.grad)u, psi_i> - mu <grad u, grad psi_i>.
/// All density-weighted inner products use the band-limited density (two-
/// thirds truncation), which removes aliasing bias from the Gram matrix; the
/// orthonormal trigonometric basis reduces each entry to two reads of the
/// density spectrum.
///
/// Time stepping: classical RK4 on the coefficients with the density frozen
/// for the whole step (one factorization per step), then one semi-Lagrangian
/// transport step with the Simpson-weighted stage velocity.  The viscous
/// dissipation integral is advanced with the same RK stages so the discrete
/// energy identity closes at the integrator's order.

#include <Eigen/Dense>
#include <functional>

#include "nsv/field.hpp"
#include "nsv/operators.hpp"
#include "nsv/stokes_basis.hpp"
#include "nsv/transport.hpp"

namespace nsv {

struct FluidParams {
  double mu = 1.0;
  double kappa = 1.0;
};

struct GalerkinState {
  double t = 0.0;
  Eigen::VectorXd c;
  DensityField rho;
  double dissipation = 0.0;  // integral of |grad u|_2^2 from 0 to t
};

/// Optional body force; eval must fill band-limited nodal values.
struct Forcing {
  std::function<void(double t, NodalField& out)> eval;
  bool active() const { return bool(eval); }
};

inline SpectralField reconstruct_velocity(const GalerkinState& s,
                                          const StokesBasis& basis) {
  return basis.reconstruct(s.c);
}

namespace detail {

/// Band-limited convective product (u.grad)u from the spectral velocity and
/// its nodal samples.  The raw nodal product carries frequencies up to twice
/// the band; the two-thirds truncation removes everything an in-band read
/// could alias onto.
/// Reusable buffers for the convection synthesis, so per-step loops do not
/// churn large allocations.
struct ConvectionScratch {
  std::vector<cplx> dspec;
  std::vector<double> dnod;
  NodalField conv;
};

inline const NodalField& dealiased_convection(const SpectralField& uhat,
                                              const NodalField& u,
                                              ConvectionScratch& ws) {
  const Grid& g = uhat.grid;
  ws.conv.grid = g;
  ws.conv.ncomp = g.dim;
  for (int a = 0; a < g.dim; ++a)
    ws.conv.comp[a].assign(static_cast<std::size_t>(g.size()), 0.0);
  ws.dspec.resize(static_cast<std::size_t>(g.size()));
  for (int a = 0; a < g.dim; ++a) {
    for (int b = 0; b < g.dim; ++b) {
      for_each_mode(g, [&](std::int64_t i, const double* k) {
        ws.dspec[i] = cplx(0.0, k[b]) * uhat.comp[a][i];
      });
      fft_inverse(g, ws.dspec, ws.dnod);
      auto& acc = ws.conv.comp[a];
      const auto& ub = u.comp[b];
      for (std::size_t i = 0; i < acc.size(); ++i)
        acc[i] += ub[i] * ws.dnod[i];
    }
  }
  // Truncate the product back to the resolved band, in place.
  const int cut = g.dealias_cutoff();
  for (int a = 0; a < g.dim; ++a) {
    fft_forward(g, ws.conv.comp[a], ws.dspec);
    for_each_mode_int(g, [&](std::int64_t i, const int* m) {
      for (int d = 0; d < g.dim; ++d)
        if (m[d] > cut || m[d] < -cut) {
          ws.dspec[i] = cplx(0.0);
          return;
        }
    });
    fft_inverse(g, ws.dspec, ws.conv.comp[a]);
  }
  return ws.conv;
}

inline NodalField dealiased_convection(const SpectralField& uhat,
                                       const NodalField& u) {
  ConvectionScratch ws;
  dealiased_convection(uhat, u, ws);
  return std::move(ws.conv);
}

/// Frozen-density Galerkin operator for one step: caches the truncated
/// density spectrum, the factored mass matrix, and stage scratch space.
class SystemOperator {
 public:
  SystemOperator(const StokesBasis& basis, const FluidParams& prm,
                 const DensityField& rho, const Forcing* forcing)
      : basis_(basis), prm_(prm), forcing_(forcing) {
    require_same_grid(basis.grid, rho.grid, "SystemOperator");
    const Grid& g = basis.grid;
    rho_hat_ = density_spectrum(rho);
    rho_hat_ = dealias(rho_hat_);
    fft_inverse(g, rho_hat_.comp[0], rho_tilde_);
    build_mass();
    llt_.compute(mass_);
    if (llt_.info() != Eigen::Success)
      throw degeneracy_error(
          "step: mass matrix is not positive definite; with kappa = 0 the "
          "momentum balance degenerates to an elliptic problem wherever the "
          "density vanishes, so a vacuum needs kappa > 0");
    if (forcing_ && forcing_->active()) fbuf_ = NodalField::zeros(g, g.dim);
  }

  const Eigen::MatrixXd& mass() const { return mass_; }

  /// Nodal synthesis of a coefficient vector, in operator-owned storage.
  /// The reference stays valid until the next call on this operator.
  const NodalField& nodal_velocity(const Eigen::VectorXd& c) const {
    const Grid& g = basis_.grid;
    basis_.reconstruct_into(c, uhat_s_);
    u_s_.grid = g;
    u_s_.ncomp = g.dim;
    for (int a = 0; a < g.dim; ++a)
      fft_inverse(g, uhat_s_.comp[a], u_s_.comp[a]);
    return u_s_;
  }

  /// Galerkin right-hand side at coefficients c and time t.
  Eigen::VectorXd rhs(double t, const Eigen::VectorXd& c) const {
    const Grid& g = basis_.grid;
    const int j = basis_.size();
    const NodalField& u = nodal_velocity(c);
    const NodalField& conv_t = dealiased_convection(uhat_s_, u, conv_s_);

    // Density-weighted momentum source rho~ (f - (u.grad)u).
    m_s_.grid = g;
    m_s_.ncomp = g.dim;
    const NodalField* f = nullptr;
    if (forcing_ && forcing_->active()) {
      forcing_->eval(t, fbuf_);
      f = &fbuf_;
    }
    for (int a = 0; a < g.dim; ++a) {
      auto& out = m_s_.comp[a];
      out.resize(static_cast<std::size_t>(g.size()));
      const auto& cv = conv_t.comp[a];
      if (f) {
        const auto& fa = f->comp[a];
        for (std::size_t i = 0; i < out.size(); ++i)
          out[i] = rho_tilde_[i] * (fa[i] - cv[i]);
      } else {
        for (std::size_t i = 0; i < out.size(); ++i)
          out[i] = -rho_tilde_[i] * cv[i];
      }
    }
    mhat_s_.grid = g;
    mhat_s_.ncomp = g.dim;
    for (int a = 0; a < g.dim; ++a)
      fft_forward(g, m_s_.comp[a], mhat_s_.comp[a]);

    Eigen::VectorXd r(j);
    for (int i = 0; i < j; ++i)
      r[i] = basis_.inner_with_mode(mhat_s_, i) -
             prm_.mu * basis_.modes[i].k2_phys * c[i];
    for (int i = 0; i < j; ++i)
      if (!std::isfinite(r[i]))
        throw numerical_error("assemble: non-finite right-hand side at t = " +
                              std::to_string(t));
    return r;
  }

  /// Coefficient time derivative: solve (G + kappa S) c' = rhs.
  Eigen::VectorXd deriv(double t, const Eigen::VectorXd& c) const {
    return llt_.solve(rhs(t, c));
  }

 private:
  void build_mass() {
    const Grid& g = basis_.grid;
    const int j = basis_.size();
    const int n = g.n;
    mass_.resize(j, j);
    auto read = [&](const std::array<int, 3>& kv) {
      std::int64_t idx =
          g.dim == 2
              ? g.flat((kv[0] % n + n) % n, (kv[1] % n + n) % n)
              : g.flat((kv[0] % n + n) % n, (kv[1] % n + n) % n,
                       (kv[2] % n + n) % n);
      return rho_hat_.comp[0][idx];
    };
    for (int i = 0; i < j; ++i) {
      const StokesMode& mi = basis_.modes[i];
      for (int l = i; l < j; ++l) {
        const StokesMode& ml = basis_.modes[l];
        double dot = 0.0;
        for (int a = 0; a < g.dim; ++a) dot += ml.e[a] * mi.e[a];
        double v = 0.0;
        if (dot != 0.0) {
          std::array<int, 3> diff = {ml.k[0] - mi.k[0], ml.k[1] - mi.k[1],
                                     ml.k[2] - mi.k[2]};
          std::array<int, 3> sum = {ml.k[0] + mi.k[0], ml.k[1] + mi.k[1],
                                    ml.k[2] + mi.k[2]};
          cplx rd = read(diff), rs = read(sum);
          // Product-to-sum of trig pairs against the density spectrum.
          if (ml.trig == 0 && mi.trig == 0)
            v = rd.real() + rs.real();
          else if (ml.trig == 1 && mi.trig == 1)
            v = rd.real() - rs.real();
          else if (ml.trig == 1 && mi.trig == 0)
            v = -rs.imag() - rd.imag();
          else
            v = -rs.imag() + rd.imag();
          v *= dot;
        }
        if (l == i) v += prm_.kappa * mi.k2_phys;
        if (!std::isfinite(v))
          throw numerical_error("assemble: non-finite mass matrix entry");
        mass_(i, l) = v;
        mass_(l, i) = v;
      }
    }
  }

  const StokesBasis& basis_;
  const FluidParams& prm_;
  const Forcing* forcing_;
  SpectralField rho_hat_;           // truncated density spectrum
  std::vector<double> rho_tilde_;   // its nodal synthesis
  Eigen::MatrixXd mass_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  mutable NodalField fbuf_;
  // Stage scratch, reused across right-hand-side evaluations.
  mutable SpectralField uhat_s_;
  mutable NodalField u_s_;
  mutable ConvectionScratch conv_s_;
  mutable NodalField m_s_;
  mutable SpectralField mhat_s_;
};

}  // namespace detail

/// Assembled mass matrix and right-hand side at the state's instant.
struct AssembledSystem {
  Eigen::MatrixXd mass;
  Eigen::VectorXd rhs;
};

inline AssembledSystem assemble_system(const GalerkinState& s,
                                       const StokesBasis& basis,
                                       const FluidParams& prm,
                                       const Forcing* forcing = nullptr) {
  detail::SystemOperator op(basis, prm, s.rho, forcing);
  return {op.mass(), op.rhs(s.t, s.c)};
}

/// Coefficient time derivative at the state's instant (mass-matrix solve).
inline Eigen::VectorXd coefficient_derivative(const GalerkinState& s,
                                              const StokesBasis& basis,
                                              const FluidParams& prm,
                                              const Forcing* forcing = nullptr) {
  detail::SystemOperator op(basis, prm, s.rho, forcing);
  return op.deriv(s.t, s.c);
}

namespace detail {

/// RK4 over the coefficients plus one transport step; the operator must have
/// been built from s.rho.
inline GalerkinState step_with(const SystemOperator& op, GalerkinState s,
                               const StokesBasis& basis, double dt,
                               double cfl_limit) {
  const Eigen::VectorXd k1 = op.deriv(s.t, s.c);
  const Eigen::VectorXd c2 = s.c + 0.5 * dt * k1;
  const Eigen::VectorXd k2 = op.deriv(s.t + 0.5 * dt, c2);
  const Eigen::VectorXd c3 = s.c + 0.5 * dt * k2;
  const Eigen::VectorXd k3 = op.deriv(s.t + 0.5 * dt, c3);
  const Eigen::VectorXd c4 = s.c + dt * k3;
  const Eigen::VectorXd k4 = op.deriv(s.t + dt, c4);

  auto grad_sq = [&](const Eigen::VectorXd& c) {
    double q = 0.0;
    for (int i = 0; i < basis.size(); ++i)
      q += basis.modes[i].k2_phys * c[i] * c[i];
    return q;
  };
  const double q1 = grad_sq(s.c), q2 = grad_sq(c2), q3 = grad_sq(c3),
               q4 = grad_sq(c4);

  // Simpson-weighted stage velocity advects the density.
  Eigen::VectorXd cbar = (s.c + 2.0 * c2 + 2.0 * c3 + c4) / 6.0;
  const NodalField& ubar = op.nodal_velocity(cbar);
  double cfl = cfl_number(ubar, dt);
  if (cfl > cfl_limit)
    throw cfl_error("step: advective CFL number " + std::to_string(cfl) +
                        " exceeds the limit " + std::to_string(cfl_limit),
                    cfl);

  s.c += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  s.dissipation += (dt / 6.0) * (q1 + 2.0 * q2 + 2.0 * q3 + q4);
  s.rho = advance_density(s.rho, ubar, dt);
  s.t += dt;
  return s;
}

}  // namespace detail

/// One full time step (assembly included).
inline GalerkinState step(const GalerkinState& s, const StokesBasis& basis,
                          const FluidParams& prm, double dt,
                          const Forcing* forcing = nullptr,
                          double cfl_limit = 0.9) {
  detail::SystemOperator op(basis, prm, s.rho, forcing);
  return detail::step_with(op, s, basis, dt, cfl_limit);
}

struct RunOptions {
  double T = 1.0;
  double dt = 1e-3;
  double cfl_limit = 0.9;
  const Forcing* forcing = nullptr;
  /// Called at every step boundary (t = 0 included) with the state and its
  /// coefficient derivative from the current mass-matrix solve.
  std::function<void(const GalerkinState&, const Eigen::VectorXd&)> on_record;
};

/// March the system from the state's time over [t, t + T].
inline GalerkinState run(GalerkinState s, const StokesBasis& basis,
                         const FluidParams& prm, const RunOptions& opts) {
  if (opts.dt <= 0.0 || opts.T <= 0.0)
    throw contract_error("run: T and dt must be positive");
  const long nsteps = std::lround(opts.T / opts.dt);
  if (nsteps < 1 || std::abs(nsteps * opts.dt - opts.T) > 1e-9 * opts.T)
    throw contract_error("run: T must be an integer multiple of dt");
  const double t0 = s.t;
  for (long i = 0; i < nsteps; ++i) {
    detail::SystemOperator op(basis, prm, s.rho, opts.forcing);
    if (opts.on_record) opts.on_record(s, op.deriv(s.t, s.c));
    s = detail::step_with(op, s, basis, opts.dt, opts.cfl_limit);
    s.t = t0 + (i + 1) * opts.dt;  // avoid accumulation drift in t
  }
  if (opts.on_record) {
    detail::SystemOperator op(basis, prm, s.rho, opts.forcing);
    opts.on_record(s, op.deriv(s.t, s.c));
  }
  return s;
}

}  // namespace nsv
