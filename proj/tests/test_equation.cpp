#include "lpdm/equation.hpp"
#include "lpdm/errors.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace lpdm;
using lpdm::test::generic_axis;

namespace {

// h* = 1 + 0.3 <x, e> is a translated unit ball, so b = I and
// |grad h|^2 + h^2 = |x + 0.3 e|^2; the matching density is closed-form.
constexpr double kShift = 0.3;

Eigen::Vector3d axis(int n) {
  Eigen::Vector3d e = generic_axis();
  if (n == 2) e[2] = 0.0;
  return e.normalized();
}

double manufactured_h(const Eigen::Vector3d& x, int n = 3) { return 1.0 + kShift * x.dot(axis(n)); }

double manufactured_f(const Eigen::Vector3d& x, const ProblemParams& pp) {
  const double rho2 = (x + kShift * axis(pp.n)).squaredNorm();
  return std::pow(manufactured_h(x, pp.n), 1.0 - pp.p) * std::pow(rho2, -(pp.n - pp.q) / 2.0);
}

GridPtr grid_for(int n) { return n == 2 ? build_grid(2, 128) : build_grid(3, 4); }

}  // namespace

TEST_CASE("constant solutions have zero residual") {
  for (int n : {2, 3}) {
    const GridPtr g = grid_for(n);
    for (auto [p, q] : {std::pair{2.0, 1.0}, {3.0, 1.0}, {1.5, 0.5}, {0.0, 0.0}}) {
      const ProblemParams pp{n, p, q};
      for (double c : {1.0, 0.5, 2.0}) {
        CAPTURE(n); CAPTURE(p); CAPTURE(q); CAPTURE(c);
        const SupportFn h(ScalarField::constant(g, c));
        const auto f = ScalarField::constant(g, std::pow(c, q - p));
        CHECK(residual(h, f, pp).sup_norm <= 1e-9);
        CHECK(log_residual(h, f, pp).sup_norm <= 1e-9);
      }
    }
  }
}

TEST_CASE("operator at the unit sphere is one") {
  const GridPtr g = build_grid(3, 3);
  const auto lhs = operator_lhs(SupportFn(ScalarField::constant(g, 1.0)), ProblemParams{3, 2.0, 1.0});
  CHECK((lhs.values().array() - 1.0).abs().maxCoeff() <= 1e-9);
}

TEST_CASE("manufactured solution: residual decays under refinement") {
  for (int n : {2, 3}) {
    const ProblemParams pp{n, 2.0, 1.0};
    std::vector<double> errors;
    const std::vector<int> res = n == 2 ? std::vector<int>{32, 64, 128} : std::vector<int>{3, 4, 5};
    for (int r : res) {
      const GridPtr g = build_grid(n, r);
      const SupportFn h(ScalarField::sample(g, [&](const Eigen::Vector3d& x) { return manufactured_h(x, n); }));
      const auto f = ScalarField::sample(g, [&](const Eigen::Vector3d& x) { return manufactured_f(x, pp); });
      errors.push_back(residual(h, f, pp).sup_norm);
    }
    CAPTURE(n);
    if (n == 3) {
      CHECK(lpdm::test::order(errors[0], errors[1]) >= 1.7);
      CHECK(lpdm::test::order(errors[1], errors[2]) >= 1.7);
    } else {
      // The sixth-order circle stencil reaches rounding level quickly.
      CHECK(errors[2] <= 1e-9);
    }
  }
}

TEST_CASE("scaling law of the operator") {
  // lhs(lambda h) = lambda^{q-p} lhs(h).
  const GridPtr g = build_grid(3, 3);
  const ProblemParams pp{3, 2.5, 0.7};
  const auto base = ScalarField::sample(g, [](const Eigen::Vector3d& x) {
    return std::sqrt(1.0 + 0.5 * x[0] * x[0] + 0.2 * x[1] * x[2]);
  });
  const auto f = ScalarField::sample(g, [](const Eigen::Vector3d& x) { return 1.0 + x[2] * x[2]; });
  const ResidualField r1 = residual(SupportFn(base), f, pp);
  for (double lambda : {0.5, 3.0}) {
    const double s = std::pow(lambda, pp.q - pp.p);
    const SupportFn scaled(ScalarField(g, lambda * base.values()));
    const ResidualField r2 = residual(scaled, ScalarField(g, s * f.values()), pp);
    const double scale = operator_lhs(SupportFn(base), pp).values().cwiseAbs().maxCoeff();
    CHECK((r2.values.values() - s * r1.values.values()).cwiseAbs().maxCoeff() <= 1e-12 * s * scale);
  }
}

TEST_CASE("log residual agrees in sign with the plain residual") {
  const GridPtr g = build_grid(3, 3);
  const ProblemParams pp{3, 2.0, 1.0};
  const SupportFn h(ScalarField::sample(g, [](const Eigen::Vector3d& x) { return manufactured_h(x); }));
  const auto f = ScalarField::sample(g, [](const Eigen::Vector3d& x) { return 0.8 + 0.5 * x[0] * x[0]; });
  const auto r = residual(h, f, pp);
  const auto G = log_residual(h, f, pp);
  for (int i = 0; i < g->size(); ++i) REQUIRE((r.values[i] > 0) == (G.values[i] > 0));
}

TEST_CASE("log residual preconditions") {
  const GridPtr g = build_grid(3, 3);
  const ProblemParams pp{3, 2.0, 1.0};
  const SupportFn one(ScalarField::constant(g, 1.0));
  CHECK_THROWS_AS(log_residual(one, ScalarField::constant(g, 0.0), pp), PreconditionError);
  CHECK_THROWS_AS(residual(one, ScalarField::constant(g, -1.0), pp), PreconditionError);
  // h = 1 - 0.8 x3^2 is positive but b has a negative eigenvalue on the equator.
  const SupportFn bad(ScalarField::sample(g, [](const Eigen::Vector3d& x) { return 1.0 - 0.8 * x[2] * x[2]; }));
  CHECK_THROWS_AS(log_residual(bad, ScalarField::constant(g, 1.0), pp), NumericalError);
}

TEST_CASE("linearization at constant solutions") {
  for (int n : {2, 3}) {
    const GridPtr g = grid_for(n);
    const ProblemParams pp{n, 3.0, 1.0};
    const SupportFn h(ScalarField::constant(g, 1.0));
    const Linearization L = linearize(h, pp);
    // G(lambda h) = G(h) + (q - p) log lambda, so L[h] = q - p.
    const ScalarField Lh = L.apply(h.field());
    CHECK((Lh.values().array() - (pp.q - pp.p)).abs().maxCoeff() <= 1e-9);
    CHECK(L.matrix().rows() == g->size());
  }
}

TEST_CASE("linearization matches central differences") {
  const GridPtr g = build_grid(3, 3);
  const ProblemParams pp{3, 2.0, 1.0};
  const SupportFn h(ScalarField::sample(g, [](const Eigen::Vector3d& x) { return manufactured_h(x); }));
  const auto f = ScalarField::constant(g, 1.0);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  const Eigen::Vector3d a(normal(rng), normal(rng), normal(rng));
  const auto delta = ScalarField::sample(g, [&](const Eigen::Vector3d& x) {
    return 0.3 * std::sin(a.dot(x)) + 0.1 * x[0] * x[1];
  });
  const double s = 1e-5;
  const auto plus = log_residual(SupportFn(ScalarField(g, h.field().values() + s * delta.values())), f, pp);
  const auto minus = log_residual(SupportFn(ScalarField(g, h.field().values() - s * delta.values())), f, pp);
  const Eigen::VectorXd fd = (plus.values.values() - minus.values.values()) / (2 * s);
  const Eigen::VectorXd exact = linearize(h, pp).apply(delta).values();
  CHECK((fd - exact).cwiseAbs().maxCoeff() <= 1e-6 * exact.cwiseAbs().maxCoeff());
}

TEST_CASE("rounding floor grows with resolution") {
  double previous = 0.0;
  for (int level = 2; level <= 4; ++level) {
    const SupportFn h(ScalarField::constant(build_grid(3, level), 1.0));
    const double floor = log_residual_rounding_floor(h);
    CHECK(floor > previous);
    CHECK(floor < 1e-10);
    previous = floor;
  }
}
