#include "lpdm/errors.hpp"
#include "lpdm/oracle.hpp"
#include "lpdm/solver.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace lpdm;

namespace {

// p = 3, q = 1, f = 1 + 0.5 cos 2 theta on the circle: h(0) from Fourier
// collocation, identical to 1e-12 at N = 32 and N = 64.
constexpr double kCircleAnchor = 0.938729241254510;

ODEProblem circle_problem(int size) {
  ODEProblem prob;
  prob.mode = OracleMode::kS1;
  prob.f = [](double t) { return 1.0 + 0.5 * std::cos(2.0 * t); };
  prob.p = 3.0;
  prob.q = 1.0;
  prob.size = size;
  return prob;
}

}  // namespace

TEST_CASE("circle oracle: constant density") {
  ODEProblem prob;
  prob.f = [](double) { return 4.0; };
  prob.p = 3.0;
  prob.q = 1.0;
  const Profile h = solve_s1(prob);
  for (double t : {0.0, 1.0, 4.0}) CHECK(h.value(t) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(h.residual <= 1e-12);
}

TEST_CASE("circle oracle: regression anchor at two resolutions") {
  const Profile a = solve_s1(circle_problem(32));
  const Profile b = solve_s1(circle_problem(64));
  CHECK(std::abs(a.value(0.0) - kCircleAnchor) <= 1e-8);
  CHECK(std::abs(b.value(0.0) - kCircleAnchor) <= 1e-8);
  CHECK(std::abs(a.value(0.0) - b.value(0.0)) <= 1e-8);
  CHECK(b.residual <= 1e-10);
  CHECK(b.min_b > 0.0);
}

TEST_CASE("circle oracle: a priori bounds") {
  const Profile h = solve_s1(circle_problem(64));
  double min_h = 1e300, max_h = 0.0, max_d1 = 0.0;
  for (int k = 0; k < 400; ++k) {
    const double t = 2.0 * test::kPi * k / 400;
    min_h = std::min(min_h, h.value(t));
    max_h = std::max(max_h, h.value(t));
    max_d1 = std::max(max_d1, std::abs(h.d1(t)));
    REQUIRE(h.H(t) > 0.0);
  }
  // max f = 1.5 and (max f)^{1/(q-p)} = 1.5^{-1/2}.
  CHECK(min_h >= std::pow(1.5, -0.5) - 1e-8);
  CHECK(max_d1 <= max_h);
  // Even density: h(theta + pi) = h(theta).
  CHECK(h.value(0.3) == doctest::Approx(h.value(0.3 + test::kPi)).epsilon(1e-12));
}

TEST_CASE("circle oracle agrees with the grid solver") {
  const Profile ref = solve_s1(circle_problem(64));
  const GridPtr g = build_grid(2, 64);
  const ProblemParams pp{2, 3.0, 1.0};
  const auto f = ScalarField::sample(g, [](const Eigen::Vector3d& x) { return 1.0 + 0.5 * (x[0] * x[0] - x[1] * x[1]); });
  const SolveReport r = newton_solve(f, pp, default_init(f, pp));
  double gap = 0.0;
  for (int i = 0; i < g->size(); ++i) gap = std::max(gap, std::abs(r.h[i] - ref.value(ref.angle_of(g->node(i)))));
  CHECK(gap <= 1e-6);
}

TEST_CASE("axisymmetric oracle: constant and bump") {
  ODEProblem prob;
  prob.mode = OracleMode::kAxisymS2;
  prob.f = [](double) { return 1.0; };
  const Profile one = solve_axisym_s2(prob);
  CHECK(one.value(0.7) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(one.H(0.0) == doctest::Approx(2.0).epsilon(1e-10));

  prob.f = [](double t) { return 1.0 + 0.5 * std::cos(t) * std::cos(t); };
  const Profile bump = solve_oracle(prob);
  CHECK(bump.residual <= 1e-10);
  CHECK(bump.value(0.0) == doctest::Approx(0.826824388293).epsilon(1e-10));
  CHECK(bump.value(test::kPi / 2) == doctest::Approx(0.877145135154).epsilon(1e-10));
  CHECK(std::isfinite(bump.H(0.0)));
  CHECK(bump.H(0.0) == doctest::Approx(bump.H(1e-6)).epsilon(1e-6));
  CHECK(bump.angle_of(Eigen::Vector3d(0, 0, -1)) == doctest::Approx(test::kPi));
}

TEST_CASE("oracle preconditions") {
  ODEProblem prob = circle_problem(63);
  CHECK_THROWS_AS(solve_s1(prob), PreconditionError);
  prob = circle_problem(32);
  prob.p = prob.q;
  CHECK_THROWS_AS(solve_s1(prob), PreconditionError);
  prob = circle_problem(32);
  prob.f = [](double t) { return std::cos(t); };
  CHECK_THROWS_AS(solve_s1(prob), PreconditionError);
}

TEST_CASE("finite-difference check of the linearization") {
  const GridPtr g = build_grid(3, 3);
  const ProblemParams pp{3, 2.0, 1.0};
  const SupportFn h(ScalarField::sample(g, [](const Eigen::Vector3d& x) {
    return std::sqrt(1.0 + 0.4 * x[0] * x[0] + 0.2 * x[1] * x[1]);
  }));
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  const Eigen::Vector3d a(normal(rng), normal(rng), normal(rng));
  const auto delta = ScalarField::sample(g, [&](const Eigen::Vector3d& x) { return std::cos(a.dot(x)); });

  const std::vector<double> steps{1e-3, 1e-4, 1e-6, 1e-14};
  const FdCheckResult fwd = fd_check(h, pp, delta, steps, FdScheme::kForward);
  REQUIRE(fwd.errors.size() == steps.size());
  // First-order truncation: ten times smaller step, about ten times smaller error.
  CHECK(fwd.errors[0] / fwd.errors[1] == doctest::Approx(10.0).epsilon(0.2));
  CHECK(fwd.errors[2] <= 1e-4);
  // At 1e-14 rounding dominates; that is reported as the floor, not a failure.
  CHECK(fwd.errors[3] > fwd.min_error);
  CHECK(fwd.floor_step >= 1e-6);

  const FdCheckResult ctr = fd_check(h, pp, delta, {1e-4, 1e-6}, FdScheme::kCentral);
  CHECK(ctr.errors[1] <= 1e-6);
  CHECK(ctr.errors[1] < fwd.errors[2]);
}
