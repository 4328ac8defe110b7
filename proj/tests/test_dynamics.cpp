#include <doctest.h>

#include <cmath>
#include <sstream>

#include "lspdyn/dynamics.hpp"
#include "lspdyn/error.hpp"
#include "lspdyn/quadrature.hpp"
#include "lspdyn/units.hpp"
#include "oracles.hpp"
#include "superatom_check.hpp"

using namespace lspdyn;
using cd = std::complex<double>;
constexpr double kHbar = units::kHbarFs;

namespace {

SpectralTable lorentzian_table(const oracle::Pseudomode& pm, const FrequencyGrid& grid) {
  std::vector<double> d(std::size_t(grid.n_points));
  const auto w = grid.points();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = pm.density(w[i]);
  return table_from_channels(grid, {d});
}

SpectralTable physical(double r, int n = 2, FrequencyGrid grid = {}) {
  SystemGeometry g;
  g.n_emitters = n;
  g.distance_nm = r;
  return circulant_channels(build_spectral_table(DrudeMetal{}, g, grid));
}

SystemGeometry geometry(int n, double r) {
  SystemGeometry g;
  g.n_emitters = n;
  g.distance_nm = r;
  return g;
}

DynamicsOptions short_run(double t_max, double dt = 0.005) {
  DynamicsOptions o;
  o.t_max_fs = t_max;
  o.dt_fs = dt;
  o.extend_for_beats = false;
  o.check_step = false;
  o.stride = 1;
  return o;
}

}  // namespace

TEST_CASE("zero density gives a zero kernel") {
  const FrequencyGrid grid{0.01, 8.0, 401};
  const auto t = table_from_channels(grid, {std::vector<double>(401, 0.0)});
  const auto k = synthesize_kernel(t, TimeGrid::covering(20.0, 0.01), 0.8, {0});
  for (const auto& v : k.k[0]) CHECK(v == cd(0.0, 0.0));
}

TEST_CASE("Lorentzian kernel matches its Fourier transform") {
  const oracle::Pseudomode pm{0.1, 0.05, 10.0, 10.0};
  const FrequencyGrid grid{0.01, 20.0, 40001};
  const auto t = lorentzian_table(pm, grid);
  const auto time = TimeGrid::covering(100.0, 0.01);
  const auto k = synthesize_kernel(t, time, pm.w0_ev, {0});
  const double k0 = std::abs(pm.kernel(0.0));
  double worst = 0.0;
  for (int s = 0; s <= time.n_steps; s += 10) worst = std::max(worst, std::abs(k.k[0][std::size_t(s)] - pm.kernel(time.t(s))));
  CHECK(worst < 0.01 * k0);
}

TEST_CASE("kernel at t = 0 is the integrated density") {
  const auto t = physical(8.0);
  const auto k = synthesize_kernel(t, TimeGrid::covering(1.0, 0.01), 0.8, {0, 1});
  for (int l : {0, 1}) {
    const auto& d = t.d_channels[std::size_t(l)];
    const double trap = quad::trapezoid(d, t.grid.step()) / (kHbar * kHbar);
    const double simp = quad::simpson(d, t.grid.step()) / (kHbar * kHbar);
    CHECK(std::abs(k.k[std::size_t(l)][0].imag()) < 1e-12 * trap);
    CHECK(k.k[std::size_t(l)][0].real() > 0.0);
    CHECK(std::abs(k.k[std::size_t(l)][0].real() - trap) < 1e-12 * trap);
    CHECK(std::abs(k.k[std::size_t(l)][0].real() - simp) < 1e-8 * simp);
  }
  // K_0(0) at r = 8 nm in fs^-2
  CHECK(k.k[0][0].real() == doctest::Approx(12.9).epsilon(0.01));
}

TEST_CASE("kernel converges under omega-grid doubling") {
  const auto a = physical(8.0);
  const auto b = physical(8.0, 2, FrequencyGrid{0.01, 8.0, 24001});
  const auto time = TimeGrid::covering(100.0, 0.01);
  const auto ka = synthesize_kernel(a, time, 0.8, {0, 1});
  const auto kb = synthesize_kernel(b, time, 0.8, {0, 1});
  for (std::size_t c = 0; c < 2; ++c) {
    double worst = 0.0;
    for (std::size_t s = 0; s < ka.k[c].size(); ++s) worst = std::max(worst, std::abs(ka.k[c][s] - kb.k[c][s]));
    CAPTURE(c);
    CHECK(worst < 1e-6 * std::abs(kb.k[c][0]));
  }
}

TEST_CASE("free evolution without coupling") {
  const FrequencyGrid grid{0.01, 8.0, 801};
  const auto t = table_from_channels(grid, {std::vector<double>(801, 0.0), std::vector<double>(801, 0.0)});
  const auto r = run_on_table(t, geometry(2, 8.0), InitialCondition{}, short_run(50.0, 0.01));
  for (std::size_t k = 0; k < r.t_fs.size(); ++k) {
    CHECK(std::abs(r.p[k] - 1.0) < 1e-12);
    CHECK(std::abs(r.site_amplitudes[0][k] - std::polar(1.0, -0.8 * r.t_fs[k] / kHbar)) < 1e-12);
    CHECK(std::abs(r.site_amplitudes[1][k]) < 1e-12);
  }
}

TEST_CASE("Volterra solve against the pseudomode closed form") {
  const oracle::Pseudomode cases[] = {
      {0.05, 0.05, 10.0, 10.0},
      {0.10, 0.02, 10.0, 9.9},
      {0.20, 0.10, 10.0, 10.3},
  };
  const FrequencyGrid grid{0.01, 20.0, 40001};
  const auto time = TimeGrid::covering(200.0, 0.005);
  for (const auto& pm : cases) {
    const auto t = lorentzian_table(pm, grid);
    const auto k = synthesize_kernel(t, time, pm.w0_ev, {0});
    const auto c = solve_volterra(k, 0, 1.0);
    double worst = 0.0;
    for (int s = 0; s <= time.n_steps; ++s) worst = std::max(worst, std::abs(c[std::size_t(s)] - pm.amplitude(time.t(s))));
    CAPTURE(pm.g_ev);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("coarsened solve equals a solve on the doubled step") {
  const auto t = physical(8.0);
  const auto k1 = synthesize_kernel(t, TimeGrid::covering(20.0, 0.01), 0.8, {0});
  const auto k2 = synthesize_kernel(t, TimeGrid::covering(20.0, 0.02), 0.8, {0});
  const auto a = solve_volterra(k1, 0, 1.0, 2);
  const auto b = solve_volterra(k2, 0, 1.0);
  REQUIRE(a.size() == b.size());
  for (std::size_t s = 0; s < a.size(); ++s) CHECK(std::abs(a[s] - b[s]) < 1e-9);
}

TEST_CASE("quadratic onset") {
  const auto t = physical(8.0);
  const auto time = TimeGrid::covering(1e-3, 1e-4);
  const auto k = synthesize_kernel(t, time, 0.8, {0});
  const auto c = solve_volterra(k, 0, 1.0);
  // least-squares slope of log(1 - P) against log t over the first 10 steps
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int s = 1; s <= 10; ++s) {
    const double x = std::log(time.t(s)), y = std::log(1.0 - std::norm(c[std::size_t(s)]));
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double slope = (10 * sxy - sx * sy) / (10 * sxx - sx * sx);
  CHECK(std::abs(slope - 2.0) < 0.1);
}

TEST_CASE("fidelity and concurrence") {
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(concurrence({{cd(s)}, {cd(s)}})[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(concurrence({{cd(1.0)}, {cd(0.0)}})[0] == 0.0);
  CHECK(fidelity({{cd(1.0)}, {cd(0.0)}}, {1.0, 0.0})[0] == 1.0);
  CHECK_THROWS_AS(concurrence({{cd(1.0)}, {cd(0.0)}, {cd(0.0)}}), Error);
  try {
    concurrence({{cd(1.0)}, {cd(0.0)}, {cd(0.0)}});
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unsupported);
  }

  const auto t = physical(8.0);
  const auto r = run_on_table(t, geometry(2, 8.0), InitialCondition{}, short_run(5.0));
  CHECK(r.p[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.c[0] < 1e-15);
  // single-site excitation: P = |c_0|^2
  for (std::size_t k = 0; k < r.p.size(); ++k) CHECK(std::abs(r.p[k] - std::norm(r.site_amplitudes[0][k])) < 1e-12);
}

TEST_CASE("initial conditions") {
  InitialCondition w{InitialKind::w_state};
  for (const auto& x : w.site_vector(4)) CHECK(std::abs(x - 0.5) < 1e-15);
  InitialCondition site{InitialKind::single_excited, 2};
  CHECK(site.site_vector(3)[2] == cd(1.0));
  InitialCondition zero{InitialKind::custom, 0, {0.0, 0.0}};
  CHECK_THROWS_AS(zero.site_vector(2), Error);
  InitialCondition wrong{InitialKind::custom, 0, {1.0}};
  CHECK_THROWS_AS(wrong.site_vector(2), Error);
}

TEST_CASE("steady-state predictor") {
  const std::vector<cd> cbar0{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
  SUBCASE("no bound state") {
    const auto p = steady_state_predictor({std::nullopt, std::nullopt}, cbar0);
    CHECK(p.distinct_energies == 0);
    CHECK(p.steady_class == SteadyClass::complete_decay);
    CHECK(p.mean == 0.0);
    CHECK(p.at(123.0) == 0.0);
  }
  SUBCASE("one bound state") {
    const double z = 0.83;
    const auto p = steady_state_predictor({BoundState{0, -0.2, z}, std::nullopt}, cbar0);
    CHECK(p.distinct_energies == 1);
    CHECK(p.steady_class == SteadyClass::population_trapping);
    CHECK(p.mean == doctest::Approx(z * z / 4).epsilon(1e-14));
    CHECK(p.at(77.0) == doctest::Approx(z * z / 4).epsilon(1e-14));
  }
  SUBCASE("two bound states") {
    const double z0 = 0.9, z1 = 0.6, e0 = -0.5, e1 = -0.1;
    const auto p = steady_state_predictor({BoundState{0, e0, z0}, BoundState{1, e1, z1}}, cbar0);
    CHECK(p.distinct_energies == 2);
    CHECK(p.steady_class == SteadyClass::persistent_oscillation);
    CHECK(p.min == doctest::Approx((z0 - z1) * (z0 - z1) / 4).epsilon(1e-14));
    CHECK(p.max == doctest::Approx((z0 + z1) * (z0 + z1) / 4).epsilon(1e-14));
    CHECK(p.beat_ev == doctest::Approx(e1 - e0).epsilon(1e-14));
    const double t = 3.7;
    const double ref = (z0 * z0 + z1 * z1 + 2 * z0 * z1 * std::cos((e1 - e0) * t / kHbar)) / 4;
    CHECK(p.at(t) == doctest::Approx(ref).epsilon(1e-13));
  }
  SUBCASE("equal residues span [0, Z^2]") {
    const auto p = steady_state_predictor({BoundState{0, -0.5, 0.7}, BoundState{1, -0.2, 0.7}}, cbar0);
    CHECK(std::abs(p.min) < 1e-15);
    CHECK(p.max == doctest::Approx(0.49).epsilon(1e-14));
  }
}

TEST_CASE("superatom reduction against a site-basis solve") {
  for (int n : {2, 4}) {
    const auto t = physical(9.5, n, FrequencyGrid{0.01, 8.0, 4001});
    const auto dev = superatom_deviation(t, 0.8, 20.0, 0.01);
    CAPTURE(n);
    CHECK(dev.symmetric < 1e-10);
    CHECK(dev.others < 1e-10);
  }
}

TEST_CASE("N = 4 single-site excitation keeps c_1 = c_3") {
  const auto t = physical(8.0, 4, FrequencyGrid{0.01, 8.0, 4001});
  const auto r = run_on_table(t, geometry(4, 8.0), InitialCondition{}, short_run(100.0, 0.01));
  for (std::size_t k = 0; k < r.t_fs.size(); ++k) CHECK(std::abs(r.site_amplitudes[1][k] - r.site_amplitudes[3][k]) < 1e-10);
  CHECK(r.max_norm <= 1.0 + 1e-6);
}

TEST_CASE("errors and determinism") {
  const auto t = physical(8.0, 2, FrequencyGrid{0.01, 8.0, 2001});
  SUBCASE("step too large for the band") {
    try {
      synthesize_kernel(t, TimeGrid::covering(10.0, 0.5), 0.8, {0});
      FAIL("expected aliasing");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::aliasing);
    }
  }
  SUBCASE("span beyond the recurrence horizon") {
    try {
      run_on_table(t, geometry(2, 8.0), InitialCondition{}, short_run(2000.0, 0.01));
      FAIL("expected aliasing");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::aliasing);
    }
  }
  SUBCASE("step-halving check") {
    auto o = short_run(50.0, 0.05);
    o.check_step = true;
    o.step_tolerance = 1e-12;
    try {
      run_on_table(t, geometry(2, 8.0), InitialCondition{}, o);
      FAIL("expected an accuracy error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::accuracy);
      CHECK(std::string(e.what()).find("suggested dt") != std::string::npos);
    }
  }
  SUBCASE("bitwise reproducible") {
    const auto a = run_on_table(t, geometry(2, 8.0), InitialCondition{}, short_run(40.0, 0.01));
    const auto b = run_on_table(t, geometry(2, 8.0), InitialCondition{}, short_run(40.0, 0.01));
    CHECK(a.p == b.p);
    CHECK(a.site_amplitudes == b.site_amplitudes);
    std::ostringstream sa, sb;
    write_trajectory_csv(a, sa);
    write_trajectory_csv(b, sb);
    CHECK(sa.str() == sb.str());
    CHECK(a.max_norm <= 1.0 + 1e-6);
  }
}
