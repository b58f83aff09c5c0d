#pragma once
/// @file estimates.hpp
/// @brief Per-step norm records and their aggregation into the bounded
///        K-functionals, plus the (j, n) sweep spread checks.
///
/// Each record snapshots the weighted norms of u, u_t, their second
/// derivatives, and the pressure gradient.  Suprema are taken over records;
/// time integrals use the trapezoid rule over the recorded instants, which
/// stays below the integrator's own error for the step sizes in use.  The
/// energy functional alone uses the dissipation integral carried by the
/// state, which is advanced with the RK stages.

#include <Eigen/Dense>
#include <algorithm>
#include <string>
#include <vector>

#include "nsv/galerkin.hpp"
#include "nsv/pressure.hpp"
#include "nsv/transport.hpp"

namespace nsv {

struct EstimateRecord {
  double time = 0.0;
  double sqrt_rho_u_sq = 0.0;   // |sqrt(rho) u|_2^2, raw density weight
  double grad_u_sq = 0.0;       // |grad u|_2^2
  double sqrt_rho_ut_sq = 0.0;  // |sqrt(rho) u_t|_2^2
  double grad_ut_sq = 0.0;      // |grad u_t|_2^2
  double d2u_sq = 0.0;          // sum |k|^4 |u_k|^2
  double d2ut_sq = 0.0;         // sum |k|^4 |u_t,k|^2
  double grad_p_sq = 0.0;       // |grad p|_2^2
  double rho_min = 0.0;
  double rho_max = 0.0;
  double energy_functional = 0.0;  // kinetic + elastic + mu * dissipation
  double f_sq = 0.0;               // |f(t)|_2^2, zero when unforced
};

namespace detail {

/// Density-weighted kinetic quadrature with the raw transported density.
inline double weighted_kinetic(const DensityField& rho, const NodalField& u) {
  const Grid& g = rho.grid;
  const double w = g.volume() / double(g.size());
  double s = 0.0;
  for (int a = 0; a < g.dim; ++a)
    for (std::int64_t q = 0; q < g.size(); ++q)
      s += rho.v[q] * u.comp[a][q] * u.comp[a][q];
  return s * w;
}

inline void coefficient_norms(const StokesBasis& basis,
                              const Eigen::VectorXd& c, double* grad_sq,
                              double* d2_sq) {
  double g1 = 0.0, g2 = 0.0;
  for (int i = 0; i < basis.size(); ++i) {
    const double k2 = basis.modes[i].k2_phys;
    g1 += k2 * c[i] * c[i];
    g2 += k2 * k2 * c[i] * c[i];
  }
  *grad_sq = g1;
  *d2_sq = g2;
}

}  // namespace detail

/// Snapshot every monitored norm at one step boundary.  c_dot and p must
/// come from the same mass-matrix solve as the state.
inline EstimateRecord record(const GalerkinState& s,
                             const Eigen::VectorXd& c_dot,
                             const SpectralField& p, const StokesBasis& basis,
                             const FluidParams& prm,
                             const NodalField* f = nullptr) {
  EstimateRecord r;
  r.time = s.t;
  NodalField u = to_nodal(basis.reconstruct(s.c));
  NodalField ut = to_nodal(basis.reconstruct(c_dot));
  r.sqrt_rho_u_sq = detail::weighted_kinetic(s.rho, u);
  r.sqrt_rho_ut_sq = detail::weighted_kinetic(s.rho, ut);
  detail::coefficient_norms(basis, s.c, &r.grad_u_sq, &r.d2u_sq);
  detail::coefficient_norms(basis, c_dot, &r.grad_ut_sq, &r.d2ut_sq);
  r.grad_p_sq = l2_norm_sq(gradient(p));
  DensityBounds b = density_bounds(s.rho);
  r.rho_min = b.min;
  r.rho_max = b.max;
  r.energy_functional = 0.5 * r.sqrt_rho_u_sq + 0.5 * prm.kappa * r.grad_u_sq +
                        prm.mu * s.dissipation;
  if (f) r.f_sq = l2_norm_sq(*f);
  const double vals[] = {r.sqrt_rho_u_sq, r.grad_u_sq, r.sqrt_rho_ut_sq,
                         r.grad_ut_sq,    r.d2u_sq,    r.d2ut_sq,
                         r.grad_p_sq,     r.rho_min,   r.rho_max,
                         r.f_sq};
  for (double v : vals)
    if (!std::isfinite(v) || v < 0.0)
      throw numerical_error("record: non-finite or negative norm at t = " +
                            std::to_string(s.t));
  return r;
}

struct EstimateLedger {
  std::vector<EstimateRecord> records;

  void push(const EstimateRecord& r) {
    if (!records.empty() && r.time <= records.back().time)
      throw contract_error("EstimateLedger: record times must increase");
    records.push_back(r);
  }
};

/// Aggregated K-functionals of one run, with the physical parameters kept
/// for cross-run consistency checks.
struct KReport {
  double k1 = 0.0;   // sup(|su|^2 + kappa |gu|^2) + mu int |gu|^2
  double k2 = 0.0;   // int(|su_t|^2 + kappa |gu_t|^2)
  double k2p = 0.0;  // sup of the same integrand
  double k3 = 0.0;   // kappa sup |d2u|^2 + mu int |d2u|^2
  double k4 = 0.0;   // kappa^2 int |d2u_t|^2
  double k4p = 0.0;  // kappa^2 sup |d2u_t|^2
  double k5 = 0.0;   // int |grad p|^2
  double k6 = 0.0;   // sup |grad p|^2
  double f_int_sq = 0.0;  // int |f|^2, the square-integrable flavor
  double f_sup_sq = 0.0;  // sup |f|^2, the bounded flavor
  double energy_initial = 0.0;
  double energy_final = 0.0;
  double mu = 0.0;
  double kappa = 0.0;
  double horizon = 0.0;
};

inline KReport finalize(const EstimateLedger& ledger, const FluidParams& prm) {
  const auto& rs = ledger.records;
  if (rs.size() < 2)
    throw contract_error("finalize: need at least two records");
  KReport k;
  k.mu = prm.mu;
  k.kappa = prm.kappa;
  k.horizon = rs.back().time - rs.front().time;
  k.energy_initial = rs.front().energy_functional;
  k.energy_final = rs.back().energy_functional;

  double sup_e = 0.0, sup_t = 0.0, sup_d2 = 0.0, sup_d2t = 0.0, sup_p = 0.0,
         sup_f = 0.0;
  double int_g = 0.0, int_t = 0.0, int_d2 = 0.0, int_d2t = 0.0, int_p = 0.0,
         int_f = 0.0;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const EstimateRecord& r = rs[i];
    sup_e = std::max(sup_e, r.sqrt_rho_u_sq + prm.kappa * r.grad_u_sq);
    sup_t = std::max(sup_t, r.sqrt_rho_ut_sq + prm.kappa * r.grad_ut_sq);
    sup_d2 = std::max(sup_d2, r.d2u_sq);
    sup_d2t = std::max(sup_d2t, r.d2ut_sq);
    sup_p = std::max(sup_p, r.grad_p_sq);
    sup_f = std::max(sup_f, r.f_sq);
    if (i + 1 < rs.size()) {
      const EstimateRecord& q = rs[i + 1];
      const double h = 0.5 * (q.time - r.time);
      int_g += h * (r.grad_u_sq + q.grad_u_sq);
      int_t += h * (r.sqrt_rho_ut_sq + prm.kappa * r.grad_ut_sq +
                    q.sqrt_rho_ut_sq + prm.kappa * q.grad_ut_sq);
      int_d2 += h * (r.d2u_sq + q.d2u_sq);
      int_d2t += h * (r.d2ut_sq + q.d2ut_sq);
      int_p += h * (r.grad_p_sq + q.grad_p_sq);
      int_f += h * (r.f_sq + q.f_sq);
    }
  }
  k.k1 = sup_e + prm.mu * int_g;
  k.k2 = int_t;
  k.k2p = sup_t;
  k.k3 = prm.kappa * sup_d2 + prm.mu * int_d2;
  k.k4 = prm.kappa * prm.kappa * int_d2t;
  k.k4p = prm.kappa * prm.kappa * sup_d2t;
  k.k5 = int_p;
  k.k6 = sup_p;
  k.f_int_sq = int_f;
  k.f_sup_sq = sup_f;
  return k;
}

/// One cell of a (j, n) refinement sweep.
struct SweepCell {
  int j = 0;
  int n = 0;
  KReport report;
};

struct SweepCheck {
  std::string name;      // which K-functional
  double max_value = 0;  // over the whole sweep
  double spread_j = 0;   // top two j values, worst over n
  double spread_n = 0;   // top two n values, worst over j
  double growth_j = 0;   // excess of the largest-j value over smaller j
  bool pass = false;
};

struct SweepReport {
  std::vector<SweepCheck> checks;
  double tolerance = 0.0;
  bool pass = false;
};

namespace detail {

inline double relative_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale < 1e-12) return 0.0;
  return std::abs(a - b) / scale;
}

}  // namespace detail

/// Check uniform boundedness of the K-functionals over a refinement sweep:
/// the two finest j (and n) levels must agree to the tolerance, and the
/// finest j level must not top the sweep by more than the tolerance.
inline SweepReport sweep_boundedness(const std::vector<SweepCell>& cells,
                                     double tolerance = 0.1) {
  if (cells.empty()) throw contract_error("sweep_boundedness: empty sweep");
  std::vector<int> js, ns;
  for (const SweepCell& c : cells) {
    if (std::find(js.begin(), js.end(), c.j) == js.end()) js.push_back(c.j);
    if (std::find(ns.begin(), ns.end(), c.n) == ns.end()) ns.push_back(c.n);
    if (c.report.mu != cells[0].report.mu ||
        c.report.kappa != cells[0].report.kappa ||
        c.report.horizon != cells[0].report.horizon)
      throw contract_error(
          "sweep_boundedness: physical parameters differ across cells");
  }
  if (js.size() < 2 || ns.size() < 2)
    throw contract_error(
        "sweep_boundedness: need at least two j and two n values");
  std::sort(js.begin(), js.end());
  std::sort(ns.begin(), ns.end());

  auto cell = [&](int j, int n) -> const KReport* {
    for (const SweepCell& c : cells)
      if (c.j == j && c.n == n) return &c.report;
    return nullptr;
  };

  struct Entry {
    const char* name;
    double KReport::*member;
  };
  const Entry entries[] = {{"K1", &KReport::k1}, {"K2", &KReport::k2},
                           {"K2'", &KReport::k2p}, {"K3", &KReport::k3},
                           {"K4", &KReport::k4}, {"K4'", &KReport::k4p},
                           {"K5", &KReport::k5}, {"K6", &KReport::k6}};

  SweepReport out;
  out.tolerance = tolerance;
  out.pass = true;
  const int j_top = js[js.size() - 1], j_2nd = js[js.size() - 2];
  const int n_top = ns[ns.size() - 1], n_2nd = ns[ns.size() - 2];
  for (const Entry& e : entries) {
    SweepCheck chk;
    chk.name = e.name;
    for (const SweepCell& c : cells)
      chk.max_value = std::max(chk.max_value, c.report.*e.member);
    for (int n : ns) {
      const KReport *a = cell(j_top, n), *b = cell(j_2nd, n);
      if (a && b)
        chk.spread_j = std::max(
            chk.spread_j, detail::relative_gap(a->*e.member, b->*e.member));
      // Growth guard: the finest level must not dominate the coarser ones.
      if (a) {
        double coarse_max = 0.0;
        bool any = false;
        for (int j : js)
          if (j != j_top)
            if (const KReport* r = cell(j, n)) {
              coarse_max = std::max(coarse_max, r->*e.member);
              any = true;
            }
        if (any && coarse_max > 1e-12)
          chk.growth_j = std::max(
              chk.growth_j, (a->*e.member - coarse_max) / coarse_max);
      }
    }
    for (int j : js) {
      const KReport *a = cell(j, n_top), *b = cell(j, n_2nd);
      if (a && b)
        chk.spread_n = std::max(
            chk.spread_n, detail::relative_gap(a->*e.member, b->*e.member));
    }
    chk.pass = chk.spread_j < tolerance && chk.spread_n < tolerance &&
               chk.growth_j < tolerance;
    out.pass = out.pass && chk.pass;
    out.checks.push_back(chk);
  }
  return out;
}

}  // namespace nsv
