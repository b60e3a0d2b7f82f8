#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "dopo/dynamics.hpp"
#include "dopo/error.hpp"
#include "dopo/solver.hpp"

using namespace dopo;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("fixed points are stationary", "[dynamics]") {
  for (double s : {0.5, 1.5}) {
    const NormalizedParams p{s, 2.0, 0.01};
    for (const SteadyStateSolution& sol : solve_branches(p)) {
      const StateVector r = evolution_rhs(pack({sol.mean_field, sol.moments, 0.0}), p);
      CHECK(r.lpNorm<Eigen::Infinity>() < 1e-10);
    }
  }
}

TEST_CASE("moment rows agree with the moment matrix", "[dynamics]") {
  const NormalizedParams p{0.8, 3.0, 0.05};
  GaussianState s;
  s.mean_field = {complex(0.7, 0.1), complex(0.2, -0.3)};
  s.moments.cpp = {0.01, 0.02};
  s.moments.npp = 0.03;
  s.moments.cps = {-0.01, 0.005};
  s.moments.xps = {0.004, -0.002};
  s.moments.css = {0.02, 0.01};
  s.moments.nss = 0.05;
  const RealMomentSystem sys = to_real_system(build_moment_system(s.mean_field, p));
  const RealMomentVector expected = sys.matrix * to_real_dof(s.moments) + sys.drive;
  const StateVector r = evolution_rhs(pack(s), p);
  CHECK((r.tail<10>() - expected).norm() < 1e-14);
}

TEST_CASE("pack and unpack are inverse", "[dynamics]") {
  GaussianState s;
  s.mean_field = {complex(1, 2), complex(3, 4)};
  s.moments.xps = {5, 6};
  s.moments.nss = 7;
  const GaussianState t = unpack(pack(s), 2.5);
  CHECK(t.mean_field.beta_p == s.mean_field.beta_p);
  CHECK(t.mean_field.beta_s == s.mean_field.beta_s);
  CHECK(t.moments.xps == s.moments.xps);
  CHECK(t.moments.nss == 7.0);
  CHECK(t.tau == 2.5);
}

TEST_CASE("free decay of a signal seed", "[dynamics]") {
  // At sigma = 0 a weak signal decays as e^{-tau}; the pump it induces is
  // O(seed^2), which changes the decay rate by a relative O(seed^2).
  const NormalizedParams p{0.0, 1.0, 1e-6};
  const std::vector<double> times{0.0, 0.5, 1.0, 3.0};
  IntegratorOptions tight;
  tight.atol = 1e-20;
  tight.rtol = 1e-12;
  const auto traj = integrate_trajectory(seeded_state(Branch::AbovePlus, 1e-5), p, times, tight);
  REQUIRE(traj.size() == times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(traj[i].tau == times[i]);
    CHECK_THAT(traj[i].mean_field.beta_s.real(), WithinRel(1e-5 * std::exp(-times[i]), 1e-9));
  }
}

TEST_CASE("pump relaxes to the injection without a signal", "[dynamics]") {
  // b_p(tau) = sigma (1 - e^{-kappa tau}) from the vacuum; the fluctuation
  // back-action on the pump is O(g^2) and negligible at this g.
  const NormalizedParams p{0.4, 5.0, 1e-6};
  const std::vector<double> times{0.1, 0.3};
  IntegratorOptions tight;
  tight.atol = 1e-14;
  tight.rtol = 1e-12;
  const auto traj = integrate_trajectory(vacuum_state(), p, times, tight);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK_THAT(traj[i].mean_field.beta_p.real(),
               WithinAbs(0.4 * (1.0 - std::exp(-5.0 * times[i])), 1e-9));
  }
}

TEST_CASE("integration reaches the solver's fixed points", "[dynamics]") {
  SECTION("below threshold from vacuum") {
    const NormalizedParams p{0.5, 1.0, 0.01};
    const IntegrationResult r = integrate_to_steady_state(vacuum_state(), p, 200.0, 1e-12);
    REQUIRE(r.report.nearest_branch.has_value());
    CHECK(*r.report.nearest_branch == Branch::Below);
    CHECK(r.report.distance < 1e-6);
  }
  SECTION("above threshold, each seed picks its own basin") {
    const NormalizedParams p{1.5, 1.0, 0.01};
    for (Branch b : {Branch::AbovePlus, Branch::AboveMinus}) {
      const IntegrationResult r = integrate_to_steady_state(seeded_state(b), p, 200.0, 1e-12);
      REQUIRE(r.report.nearest_branch.has_value());
      CHECK(*r.report.nearest_branch == b);
      CHECK(r.report.distance < 1e-6);
    }
  }
  SECTION("a seed far below g relaxes onto the symmetric branch") {
    const NormalizedParams p{1.5, 1.0, 0.01};
    const IntegrationResult r =
        integrate_to_steady_state(seeded_state(Branch::AbovePlus, 1e-3), p, 200.0, 1e-12);
    REQUIRE(r.report.nearest_branch.has_value());
    CHECK(*r.report.nearest_branch == Branch::Below);
  }
  SECTION("large kappa stays on budget") {
    const NormalizedParams p{0.5, 1000.0, 0.01};
    const IntegrationResult r = integrate_to_steady_state(vacuum_state(), p, 50.0, 1e-10);
    CHECK(r.report.converged);
    CHECK(r.report.distance < 1e-6);
  }
}

TEST_CASE("integration arguments are checked", "[dynamics]") {
  const NormalizedParams p{0.5, 1.0, 0.01};
  CHECK_THROWS_AS(integrate_to_steady_state(vacuum_state(), p, -1.0, 1e-8), Error);
  const std::vector<double> backwards{1.0, 0.5};
  CHECK_THROWS_AS(integrate_trajectory(vacuum_state(), p, backwards), Error);
}

TEST_CASE("coupled jacobian of a quadratic flow", "[dynamics]") {
  const NormalizedParams p{1.5, 1.0, 0.01};
  const auto sols = solve_branches(p);
  const GaussianState s{sols[1].mean_field, sols[1].moments, 0.0};
  const StateJacobian J = coupled_jacobian(s, p);
  // Directional derivative by a much smaller central step.
  StateVector dir = StateVector::LinSpaced(14, -1.0, 1.0);
  const double h = 1e-6;
  const StateVector fd =
      (evolution_rhs(pack(s) + h * dir, p) - evolution_rhs(pack(s) - h * dir, p)) / (2 * h);
  CHECK((J * dir - fd).norm() < 1e-7);
  CHECK(coupled_max_re_eig(s, p) < 0.0);
}

TEST_CASE("trajectory csv", "[dynamics]") {
  const NormalizedParams p{0.5, 1.0, 0.01};
  const std::vector<double> times{0.0, 1.0};
  const auto traj = integrate_trajectory(vacuum_state(), p, times);
  std::ostringstream os;
  write_trajectory_csv(os, traj, p);
  std::istringstream in(os.str());
  std::string header;
  std::string columns;
  std::getline(in, header);
  std::getline(in, columns);
  CHECK(header.rfind("# params: sigma=", 0) == 0);
  CHECK(columns.rfind("tau,re_beta_p,", 0) == 0);
  CHECK(columns.find(",Vx,Vy") != std::string::npos);
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 2);
}
