/// @file test_estimates.cpp
/// @brief Norm records, K-functional aggregation, sweep spread checks, and
///        the two-solution stability monitor.

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "nsv/estimates.hpp"
#include "nsv/initial_data.hpp"
#include "nsv/stability.hpp"
#include "oracles.hpp"

using namespace nsv;

namespace {

constexpr double kTwoPiSq = 19.739208802178716;  // 2 pi^2

GalerkinState make_state(const StokesBasis& basis, const Eigen::VectorXd& c,
                         const DensityField& rho) {
  GalerkinState s;
  s.c = c;
  s.rho = rho;
  return s;
}

/// Run the system while building a ledger with one record per boundary,
/// recovering the pressure at each from the live mass-matrix solve.
EstimateLedger ledger_of_run(GalerkinState s0, const StokesBasis& basis,
                             const FluidParams& prm, double T, double dt,
                             const Forcing* forcing = nullptr) {
  EstimateLedger ledger;
  NodalField fbuf = NodalField::zeros(basis.grid, basis.grid.dim);
  RunOptions opts;
  opts.T = T;
  opts.dt = dt;
  opts.forcing = forcing;
  opts.on_record = [&](const GalerkinState& st, const Eigen::VectorXd& cd) {
    SpectralField p = recover_pressure(st, basis, prm, cd, forcing);
    const NodalField* f = nullptr;
    if (forcing && forcing->active()) {
      forcing->eval(st.t, fbuf);
      f = &fbuf;
    }
    ledger.push(record(st, cd, p, basis, prm, f));
  };
  run(s0, basis, prm, opts);
  return ledger;
}

}  // namespace

TEST_CASE("record captures the closed-form norms of a single shear mode") {
  Grid g(2, 64);
  FluidParams prm{0.1, 1.0};
  StokesBasis basis = build_basis(g, prm.mu, 8);
  NodalField u0 = velocity_preset(g, VelocityPreset::kSingleMode, 1.0);
  GalerkinState s = make_state(basis, project_velocity(to_spectral(u0), basis),
                               DensityField::constant(g, 1.0));
  Eigen::VectorXd cd = coefficient_derivative(s, basis, prm);
  SpectralField p = recover_pressure(s, basis, prm, cd);
  EstimateRecord r = record(s, cd, p, basis, prm);

  // |k| = 1, so the plain, gradient, and second-derivative norms coincide.
  REQUIRE(r.sqrt_rho_u_sq == Catch::Approx(kTwoPiSq).epsilon(1e-12));
  REQUIRE(r.grad_u_sq == Catch::Approx(kTwoPiSq).epsilon(1e-12));
  REQUIRE(r.d2u_sq == Catch::Approx(kTwoPiSq).epsilon(1e-12));
  // u_t = -mu/(1+kappa) u for this mode.
  const double w = prm.mu / (1.0 + prm.kappa);
  REQUIRE(r.sqrt_rho_ut_sq == Catch::Approx(w * w * kTwoPiSq).epsilon(1e-9));
  REQUIRE(r.grad_ut_sq == Catch::Approx(w * w * kTwoPiSq).epsilon(1e-9));
  REQUIRE(r.grad_p_sq < 1e-12);
  REQUIRE(r.rho_min == 1.0);
  REQUIRE(r.rho_max == 1.0);
  REQUIRE(r.energy_functional ==
          Catch::Approx(0.5 * kTwoPiSq * (1.0 + prm.kappa)).epsilon(1e-12));
  REQUIRE(r.f_sq == 0.0);
}

TEST_CASE("record of the zero state is identically zero") {
  Grid g(2, 32);
  FluidParams prm{0.5, 0.5};
  StokesBasis basis = build_basis(g, prm.mu, 4);
  GalerkinState s = make_state(basis, Eigen::VectorXd::Zero(4),
                               DensityField::constant(g, 1.0));
  Eigen::VectorXd cd = coefficient_derivative(s, basis, prm);
  EstimateRecord r = record(s, cd, recover_pressure(s, basis, prm, cd), basis,
                            prm);
  REQUIRE(r.sqrt_rho_u_sq == 0.0);
  REQUIRE(r.grad_u_sq == 0.0);
  REQUIRE(r.sqrt_rho_ut_sq == 0.0);
  REQUIRE(r.d2u_sq == 0.0);
  REQUIRE(r.grad_p_sq < 1e-28);
  REQUIRE(r.energy_functional == 0.0);
}

TEST_CASE("record reports the exact lifted vacuum floor") {
  Grid g(2, 64);
  FluidParams prm{0.1, 0.5};
  StokesBasis basis = build_basis(g, prm.mu, 4);
  VacuumRegion reg;
  reg.radius = 1.2;
  reg.ramp = 0.4;
  DensityField rho = lift_density(make_vacuum_density(g, reg, 1.0), 8, 1.0);
  GalerkinState s = make_state(basis, Eigen::VectorXd::Zero(4), rho);
  Eigen::VectorXd cd = coefficient_derivative(s, basis, prm);
  EstimateRecord r = record(s, cd, recover_pressure(s, basis, prm, cd), basis,
                            prm);
  REQUIRE(r.rho_min == 0.125);
  REQUIRE(r.rho_max <= 1.125 + 1e-12);
}

TEST_CASE("ledger aggregation reproduces the decay run's closed-form Ks") {
  // u = (cos y, 0), rho = 1: every coefficient obeys (1+kappa) c' = -mu c,
  // so each K-functional reduces to elementary integrals of exp(-2wt).
  Grid g(2, 32);
  const double mu = 0.1, kappa = 1.0, T = 1.0, dt = 1e-3;
  FluidParams prm{mu, kappa};
  StokesBasis basis = build_basis(g, mu, 8);
  NodalField u0 = velocity_preset(g, VelocityPreset::kSingleMode, 1.0);
  GalerkinState s0 = make_state(basis, project_velocity(to_spectral(u0), basis),
                                DensityField::constant(g, 1.0));
  EstimateLedger ledger = ledger_of_run(s0, basis, prm, T, dt);
  REQUIRE(ledger.records.size() == 1001);

  KReport k = finalize(ledger, prm);
  const double w = mu / (1.0 + kappa);
  const double decay = 1.0 - std::exp(-2.0 * w * T);  // 1 - e^{-0.1}
  const double c0sq = kTwoPiSq;

  // K1 = (1+kappa) c0^2 + mu c0^2 decay/(2w); about 41.3569.
  REQUIRE(k.k1 == Catch::Approx((1.0 + kappa) * c0sq +
                                mu * c0sq * decay / (2.0 * w))
                      .epsilon(1e-6));
  REQUIRE(k.k2 ==
          Catch::Approx(w * w * (1.0 + kappa) * c0sq * decay / (2.0 * w))
              .epsilon(1e-6));
  REQUIRE(k.k2p == Catch::Approx(w * w * (1.0 + kappa) * c0sq).epsilon(1e-6));
  REQUIRE(k.k3 ==
          Catch::Approx(kappa * c0sq + mu * c0sq * decay / (2.0 * w))
              .epsilon(1e-6));
  REQUIRE(k.k4 == Catch::Approx(kappa * kappa * w * w * c0sq * decay /
                                (2.0 * w))
                      .epsilon(1e-6));
  REQUIRE(k.k4p == Catch::Approx(kappa * kappa * w * w * c0sq).epsilon(1e-6));
  REQUIRE(k.k5 < 1e-12);
  REQUIRE(k.k6 < 1e-12);

  // The energy functional is the conserved total: flat along the run.
  double emax = 0.0;
  for (const EstimateRecord& r : ledger.records) {
    emax = std::max(emax, r.energy_functional);
    REQUIRE(r.energy_functional <=
            ledger.records.front().energy_functional * (1.0 + 1e-9));
  }
  REQUIRE(std::abs(k.energy_final - k.energy_initial) <
          1e-9 * k.energy_initial);
}

TEST_CASE("ledger and finalize reject malformed input") {
  FluidParams prm{0.1, 1.0};
  EstimateLedger ledger;
  EstimateRecord r;
  r.time = 0.5;
  ledger.push(r);
  REQUIRE_THROWS_AS(finalize(ledger, prm), contract_error);
  EstimateRecord r2;
  r2.time = 0.5;  // not increasing
  REQUIRE_THROWS_AS(ledger.push(r2), contract_error);
  r2.time = 0.25;
  REQUIRE_THROWS_AS(ledger.push(r2), contract_error);
}

TEST_CASE("vacuum run ledger keeps consistency relations between Ks") {
  Grid g(2, 64);
  FluidParams prm{0.2, 0.5};
  StokesBasis basis = build_basis(g, prm.mu, 12);
  VacuumRegion reg;
  reg.radius = 1.2;
  reg.ramp = 0.4;
  DensityField rho = lift_density(make_vacuum_density(g, reg, 1.0), 8, 1.0);
  NodalField u0 = velocity_preset(g, VelocityPreset::kTaylorGreen, 0.5);
  GalerkinState s0 =
      make_state(basis, project_velocity(to_spectral(u0), basis), rho);
  EstimateLedger ledger = ledger_of_run(s0, basis, prm, 0.2, 5e-3);
  KReport k = finalize(ledger, prm);

  REQUIRE(k.k4 <= k.horizon * k.k4p * (1.0 + 1e-12));
  const EstimateRecord& last = ledger.records.back();
  REQUIRE(k.k2p >= last.sqrt_rho_ut_sq + prm.kappa * last.grad_ut_sq);

  // The pointwise density range never leaves its initial envelope.
  const double lo0 = ledger.records.front().rho_min;
  const double hi0 = ledger.records.front().rho_max;
  for (const EstimateRecord& r : ledger.records) {
    REQUIRE(r.rho_min >= lo0);
    REQUIRE(r.rho_max <= hi0);
  }
  for (const EstimateRecord& r : ledger.records) {
    REQUIRE(std::isfinite(r.grad_p_sq));
    REQUIRE(r.grad_p_sq >= 0.0);
  }
}

TEST_CASE("both forcing norm flavors are aggregated") {
  Grid g(2, 32);
  FluidParams prm{0.3, 0.5};
  StokesBasis basis = build_basis(g, prm.mu, 8);
  const double amp = 0.3, T = 0.2, dt = 0.01;
  NodalField fshape = velocity_preset(g, VelocityPreset::kSingleMode, amp);
  Forcing forcing;
  forcing.eval = [&](double, NodalField& out) { out = fshape; };

  GalerkinState s0 = make_state(basis, Eigen::VectorXd::Zero(8),
                                DensityField::constant(g, 1.0));
  EstimateLedger ledger = ledger_of_run(s0, basis, prm, T, dt, &forcing);
  KReport k = finalize(ledger, prm);

  const double fsq = amp * amp * kTwoPiSq;
  REQUIRE(k.f_sup_sq == Catch::Approx(fsq).epsilon(1e-12));
  REQUIRE(k.f_int_sq == Catch::Approx(T * fsq).epsilon(1e-12));
}

TEST_CASE("K values ignore relabeling of equal-eigenvalue modes") {
  Grid g(2, 32);
  FluidParams prm{0.4, 0.6};
  StokesBasis basis = build_basis(g, prm.mu, 4);
  StokesBasis perm = basis;
  std::swap(perm.modes[1], perm.modes[3]);
  std::swap(perm.nodal[1], perm.nodal[3]);
  Eigen::VectorXd c(4), cp(4);
  c << 0.2, -0.4, 0.3, 0.15;
  cp << 0.2, 0.15, 0.3, -0.4;
  DensityField rho;
  rho.grid = g;
  rho.v = test::sample(g, [](double x, double y, double) {
    return 1.0 + 0.25 * std::cos(x) * std::sin(y);
  });
  GalerkinState a = make_state(basis, c, rho);
  GalerkinState b = make_state(perm, cp, rho);
  Eigen::VectorXd cda = coefficient_derivative(a, basis, prm);
  Eigen::VectorXd cdb = coefficient_derivative(b, perm, prm);
  EstimateRecord ra =
      record(a, cda, recover_pressure(a, basis, prm, cda), basis, prm);
  EstimateRecord rb =
      record(b, cdb, recover_pressure(b, perm, prm, cdb), perm, prm);
  REQUIRE(ra.sqrt_rho_u_sq == Catch::Approx(rb.sqrt_rho_u_sq).epsilon(1e-12));
  REQUIRE(ra.grad_u_sq == Catch::Approx(rb.grad_u_sq).epsilon(1e-12));
  REQUIRE(ra.d2u_sq == Catch::Approx(rb.d2u_sq).epsilon(1e-12));
  REQUIRE(ra.sqrt_rho_ut_sq ==
          Catch::Approx(rb.sqrt_rho_ut_sq).epsilon(1e-10));
  REQUIRE(ra.grad_p_sq == Catch::Approx(rb.grad_p_sq).margin(1e-12));
}

TEST_CASE("sweep spread checks accept flat Ks and name the offender") {
  KReport base;
  base.k1 = 10.0;
  base.k2 = 4.0;
  base.k3 = 7.0;
  base.k4 = 1.0;
  base.mu = 0.1;
  base.kappa = 1.0;
  base.horizon = 1.0;
  std::vector<SweepCell> cells;
  for (int j : {8, 16, 32}) {
    for (int n : {4, 8}) {
      cells.push_back({j, n, base});
    }
  }

  SECTION("identical reports pass with zero spread") {
    SweepReport rep = sweep_boundedness(cells);
    REQUIRE(rep.pass);
    for (const SweepCheck& c : rep.checks) {
      REQUIRE(c.spread_j == 0.0);
      REQUIRE(c.spread_n == 0.0);
      REQUIRE(c.pass);
    }
  }

  SECTION("doubling K1 at the largest j fails exactly that check") {
    for (SweepCell& c : cells)
      if (c.j == 32) c.report.k1 *= 2.0;
    SweepReport rep = sweep_boundedness(cells);
    REQUIRE_FALSE(rep.pass);
    for (const SweepCheck& c : rep.checks) {
      if (c.name == "K1") {
        REQUIRE_FALSE(c.pass);
        REQUIRE(c.spread_j > 0.1);
        REQUIRE(c.growth_j > 0.1);
      } else {
        REQUIRE(c.pass);
      }
    }
  }

  SECTION("parameter mismatch across cells is rejected") {
    cells.back().report.mu = 0.2;
    REQUIRE_THROWS_AS(sweep_boundedness(cells), contract_error);
  }

  SECTION("a single refinement level cannot be judged") {
    std::vector<SweepCell> one;
    one.push_back({8, 4, base});
    one.push_back({8, 8, base});
    REQUIRE_THROWS_AS(sweep_boundedness(one), contract_error);
  }
}

TEST_CASE("difference energy: closed forms and contracts") {
  Grid g(2, 32);
  FluidParams prm{0.1, 0.5};
  StokesBasis basis = build_basis(g, prm.mu, 8);
  DensityField rho = DensityField::constant(g, 1.0);

  SECTION("identical states carry zero difference energy") {
    Eigen::VectorXd c =
        project_velocity(test::random_divfree(g, 2, 3, 0.5), basis);
    GalerkinState a = make_state(basis, c, rho);
    REQUIRE(difference_energy(a, a, basis, prm) == 0.0);
  }

  SECTION("single mode against rest has energy (1+kappa) c0^2") {
    NodalField u0 = velocity_preset(g, VelocityPreset::kSingleMode, 1.0);
    GalerkinState a =
        make_state(basis, project_velocity(to_spectral(u0), basis), rho);
    GalerkinState b = make_state(basis, Eigen::VectorXd::Zero(8), rho);
    REQUIRE(difference_energy(a, b, basis, prm) ==
            Catch::Approx((1.0 + prm.kappa) * kTwoPiSq).epsilon(1e-12));
    // Equal densities make the weighting symmetric.
    REQUIRE(difference_energy(b, a, basis, prm) ==
            Catch::Approx(difference_energy(a, b, basis, prm))
                .epsilon(1e-12));
  }

  SECTION("quadratic scaling in the perturbation size") {
    auto energy_of = [&](double eps) {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(8);
      c[2] = eps;
      GalerkinState a = make_state(basis, c, rho);
      GalerkinState b = make_state(basis, Eigen::VectorXd::Zero(8), rho);
      return difference_energy(a, b, basis, prm);
    };
    REQUIRE(energy_of(2e-3) / energy_of(1e-3) ==
            Catch::Approx(4.0).epsilon(1e-9));
  }

  SECTION("mismatched times are rejected") {
    GalerkinState a = make_state(basis, Eigen::VectorXd::Zero(8), rho);
    GalerkinState b = a;
    b.t = 0.5;
    REQUIRE_THROWS_AS(difference_energy(a, b, basis, prm), contract_error);
  }
}

TEST_CASE("stability monitor on a perturbed decay pair") {
  Grid g(2, 32);
  const double mu = 0.1, kappa = 1.0;
  FluidParams prm{mu, kappa};
  StokesBasis basis = build_basis(g, mu, 8);
  NodalField u0 = velocity_preset(g, VelocityPreset::kSingleMode, 1.0);
  Eigen::VectorXd c0 = project_velocity(to_spectral(u0), basis);
  DensityField rho = DensityField::constant(g, 1.0);
  RunOptions opts;
  opts.T = 0.5;
  opts.dt = 5e-3;

  auto perturbed_series = [&](double eps) {
    Eigen::VectorXd cp = c0;
    cp[2] += eps;
    return gronwall_monitor(make_state(basis, cp, rho),
                            make_state(basis, c0, rho), basis, prm, opts);
  };

  SECTION("identical data stays identical, bitwise") {
    GronwallSeries s = gronwall_monitor(make_state(basis, c0, rho),
                                        make_state(basis, c0, rho), basis,
                                        prm, opts);
    REQUIRE(s.pass);
    for (double e : s.energy) REQUIRE(e == 0.0);
  }

  SECTION("bound holds and the normalized energy is scale-invariant") {
    GronwallSeries s3 = perturbed_series(1e-3);
    GronwallSeries s4 = perturbed_series(1e-4);
    REQUIRE(s3.pass);
    REQUIRE(s4.pass);
    REQUIRE(s3.energy.front() > 0.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < s3.energy.size(); ++i) {
      const double r3 = s3.energy[i] / s3.energy.front();
      const double r4 = s4.energy[i] / s4.energy.front();
      worst = std::max(worst, std::abs(r3 - r4) / std::max(r3, r4));
    }
    REQUIRE(worst < 0.1);

    // Step-to-step continuity: growth is capped by the local integrand.
    for (std::size_t i = 0; i + 1 < s3.energy.size(); ++i) {
      const double amax = std::max(s3.integrand[i], s3.integrand[i + 1]);
      REQUIRE(s3.energy[i + 1] <=
              s3.energy[i] * std::exp(amax * opts.dt) * (1.0 + 1e-6));
    }
  }

  SECTION("separating from identical data is a uniqueness violation") {
    // A stateful forcing hands the two lockstep runs different fields, the
    // only way to drive bitwise-equal data apart; the monitor must treat
    // that as a broken pipeline rather than report a bound.
    int calls = 0;
    Forcing evil;
    evil.eval = [&calls, &g](double, NodalField& out) {
      out = velocity_preset(g, VelocityPreset::kSingleMode,
                            0.05 * double(++calls % 5));
    };
    RunOptions fopts = opts;
    fopts.T = 0.05;
    fopts.dt = 5e-3;
    fopts.forcing = &evil;
    REQUIRE_THROWS_AS(
        gronwall_monitor(make_state(basis, c0, rho),
                         make_state(basis, c0, rho), basis, prm, fopts),
        numerical_error);
  }

  SECTION("step count contract") {
    RunOptions bad = opts;
    bad.T = 0.512;
    bad.dt = 5e-3;
    REQUIRE_THROWS_AS(gronwall_monitor(make_state(basis, c0, rho),
                                       make_state(basis, c0, rho), basis, prm,
                                       bad),
                      contract_error);
  }
}

TEST_CASE("stability monitor survives a vacuum-disk base flow") {
  Grid g(2, 64);
  FluidParams prm{0.25, 0.5};
  StokesBasis basis = build_basis(g, prm.mu, 12);
  VacuumRegion reg;
  reg.radius = 1.2;
  reg.ramp = 0.4;
  DensityField rho = lift_density(make_vacuum_density(g, reg, 1.0), 8, 1.0);
  NodalField u0 = velocity_preset(g, VelocityPreset::kTaylorGreen, 1.0);
  Eigen::VectorXd c0 = project_velocity(to_spectral(u0), basis);
  Eigen::VectorXd cp = c0;
  cp[0] += 1e-3;
  RunOptions opts;
  opts.T = 0.1;
  opts.dt = 2.5e-3;
  GronwallSeries s = gronwall_monitor(make_state(basis, cp, rho),
                                      make_state(basis, c0, rho), basis, prm,
                                      opts);
  REQUIRE(s.pass);
  REQUIRE(s.energy.front() > 0.0);
  for (double b : s.bound) REQUIRE(std::isfinite(b));
}
