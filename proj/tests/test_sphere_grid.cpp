#include "lpdm/errors.hpp"
#include "lpdm/sphere_grid.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace lpdm;
using lpdm::test::generic_axis;
using lpdm::test::kPi;

namespace {

double height(const Eigen::Vector3d& x) { return x.dot(generic_axis()); }

}  // namespace

TEST_CASE("circle grid: equispaced nodes with equal weights") {
  const GridPtr g = build_grid(2, 64);
  CHECK(g->size() == 64);
  CHECK(g->spec() == "S1:nodes=64");
  for (int i = 0; i < g->size(); ++i) {
    CHECK(g->weight(i) == doctest::Approx(2.0 * kPi / 64).epsilon(1e-14));
    CHECK(g->node(i)[2] == 0.0);
  }
  CHECK(g->triangles().empty());
}

TEST_CASE("icosahedral grid: node counts and total weight") {
  for (int level = 1; level <= 4; ++level) {
    const GridPtr g = build_grid(3, level);
    CHECK(g->size() == 10 * (1 << (2 * level)) + 2);
    double total = 0.0;
    for (double w : g->weights()) total += w;
    CHECK(total == doctest::Approx(4.0 * kPi).epsilon(1e-12));
  }
  CHECK(build_grid(3, 3)->size() == 642);
}

TEST_CASE("grid construction rejects bad resolutions") {
  CHECK_THROWS_AS(build_grid(3, 9), PreconditionError);
  CHECK_THROWS_AS(build_grid(3, -1), PreconditionError);
  CHECK_THROWS_AS(build_grid(2, 15), PreconditionError);
  CHECK_THROWS_AS(build_grid(2, 33), PreconditionError);
  CHECK_THROWS_AS(build_grid(4, 3), PreconditionError);
  // 12 nodes cannot support the quartic fit.
  CHECK_THROWS_AS(build_grid(3, 0), NumericalError);
}

TEST_CASE("grid invariants: unit nodes, antipodes, positive weights, orthonormal frames") {
  std::vector<GridPtr> grids;
  for (int level = 1; level <= 5; ++level) grids.push_back(build_grid(3, level));
  for (int count : {16, 64, 130}) grids.push_back(build_grid(2, count));
  for (const GridPtr& g : grids) {
    CAPTURE(g->spec());
    for (int i = 0; i < g->size(); ++i) {
      const Eigen::Vector3d& x = g->node(i);
      REQUIRE(std::abs(x.norm() - 1.0) <= 1e-12);
      const int a = g->antipode(i);
      REQUIRE(g->antipode(a) == i);
      REQUIRE((g->node(a) + x).norm() <= 1e-12);
      REQUIRE(g->weight(i) > 0.0);
      const TangentFrame& fr = g->frame(i);
      REQUIRE(std::abs(fr.e1.norm() - 1.0) <= 1e-12);
      REQUIRE(std::abs(fr.e1.dot(x)) <= 1e-12);
      if (g->dim() == 3) {
        REQUIRE(std::abs(fr.e2.norm() - 1.0) <= 1e-12);
        REQUIRE(std::abs(fr.e1.dot(fr.e2)) <= 1e-12);
        REQUIRE(std::abs(fr.e2.dot(x)) <= 1e-12);
      }
      REQUIRE(static_cast<int>(g->stencil(i).neighbors.size()) >= (g->dim() == 3 ? 6 : 2));
    }
  }
}

TEST_CASE("grids are deterministic") {
  const GridPtr a = build_grid(3, 3);
  const GridPtr b = build_grid(3, 3);
  CHECK(a->fingerprint() == b->fingerprint());
  for (int i = 0; i < a->size(); ++i) {
    REQUIRE(a->node(i) == b->node(i));
    REQUIRE(a->frame(i).e1 == b->frame(i).e1);
    REQUIRE(a->weight(i) == b->weight(i));
  }
  CHECK(build_grid(3, 2)->fingerprint() != a->fingerprint());
}

TEST_CASE("exp and log maps are inverse near a node") {
  const GridPtr g = build_grid(3, 2);
  for (int i = 0; i < g->size(); i += 7) {
    const Eigen::Vector2d v(0.05, -0.12);
    const Eigen::Vector3d y = g->exp_map(i, v);
    CHECK(std::abs(y.norm() - 1.0) <= 1e-14);
    CHECK((g->log_map(i, y) - v).norm() <= 1e-13);
  }
}

TEST_CASE("quadrature of simple integrands") {
  const GridPtr g = build_grid(3, 4);
  CHECK(integrate(ScalarField::constant(g, 1.0)) == doctest::Approx(4.0 * kPi).epsilon(1e-12));
  const auto t2 = ScalarField::sample(g, [](const Eigen::Vector3d& x) { return height(x) * height(x); });
  CHECK(std::abs(integrate(t2) - 4.0 * kPi / 3.0) <= 1e-3);
  const GridPtr c = build_grid(2, 64);
  const auto cos2 = ScalarField::sample(c, [](const Eigen::Vector3d& x) { return x[0] * x[0]; });
  CHECK(integrate(cos2) == doctest::Approx(kPi).epsilon(1e-13));
}

TEST_CASE("derivatives of constants vanish") {
  for (const GridPtr& g : {build_grid(3, 3), build_grid(2, 64)}) {
    const auto one = ScalarField::constant(g, 3.5);
    for (const Jet& j : jets(one)) {
      REQUIRE(j.grad.norm() <= 1e-11);
      REQUIRE(j.hess.cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
}

TEST_CASE("covariant derivatives of a linear height function") {
  // t = <x, e>: grad t = e - t x, hess t = -t g, lap t = -(n-1) t.
  const GridPtr g = build_grid(3, 4);
  const auto t = ScalarField::sample(g, height);
  const auto grads = gradient(t);
  const auto hess = hessian(t);
  const auto lap = laplacian(t);
  double worst_grad = 0.0, worst_hess = 0.0, worst_lap = 0.0;
  for (int i = 0; i < g->size(); ++i) {
    const Eigen::Vector3d exact = generic_axis() - t[i] * g->node(i);
    worst_grad = std::max(worst_grad, (grads[i] - exact).norm());
    worst_hess = std::max(worst_hess, (hess[i] + t[i] * Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff());
    worst_lap = std::max(worst_lap, std::abs(lap[i] + 2.0 * t[i]));
  }
  CHECK(worst_grad <= 1e-5);
  CHECK(worst_hess <= 1e-3);
  CHECK(worst_lap <= 1e-3);

  const GridPtr c = build_grid(2, 128);
  const auto tc = ScalarField::sample(c, height);
  const auto lc = laplacian(tc);
  for (int i = 0; i < c->size(); ++i) REQUIRE(std::abs(lc[i] + tc[i]) <= 1e-8);
}

TEST_CASE("laplacian converges at second order or better") {
  // lap t^2 = 2 - 6 t^2 on S^2.
  std::vector<double> errors;
  for (int level = 3; level <= 5; ++level) {
    const GridPtr g = build_grid(3, level);
    const auto f = ScalarField::sample(g, [](const Eigen::Vector3d& x) { return height(x) * height(x); });
    const auto lap = laplacian(f);
    double e = 0.0;
    for (int i = 0; i < g->size(); ++i) {
      const double t = height(g->node(i));
      e = std::max(e, std::abs(lap[i] - (2.0 - 6.0 * t * t)));
    }
    errors.push_back(e);
  }
  CHECK(lpdm::test::order(errors[0], errors[1]) >= 1.7);
  CHECK(lpdm::test::order(errors[1], errors[2]) >= 1.7);
}

TEST_CASE("laplacian equals the trace of the hessian") {
  for (const GridPtr& g : {build_grid(3, 3), build_grid(2, 64)}) {
    const auto f = ScalarField::sample(g, [](const Eigen::Vector3d& x) {
      return std::exp(x[0]) + x[1] * x[2] - 0.3 * x[0] * x[1];
    });
    const auto hess = hessian(f);
    const auto lap = laplacian(f);
    for (int i = 0; i < g->size(); ++i) {
      const double tr = g->dim() == 3 ? hess[i].trace() : hess[i](0, 0);
      REQUIRE(std::abs(lap[i] - tr) <= 1e-10 * (1.0 + std::abs(tr)));
    }
  }
}

TEST_CASE("even symmetrisation") {
  const GridPtr g = build_grid(3, 3);
  const auto odd = ScalarField::sample(g, height);
  const auto even = ScalarField::sample(g, [](const Eigen::Vector3d& x) { return 1.0 + x[2] * x[2]; });
  CHECK(symmetrize_even(odd).values().cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(lpdm::test::sup_diff(symmetrize_even(even).values(), even.values()) <= 1e-15);

  const auto mixed = ScalarField::sample(g, [](const Eigen::Vector3d& x) { return 1.0 + height(x) + x[0] * x[0]; });
  const auto once = symmetrize_even(mixed);
  const auto twice = symmetrize_even(once);
  CHECK(once.values() == twice.values());
  CHECK(integrate(once) == doctest::Approx(integrate(mixed)).epsilon(1e-12));
  for (int i = 0; i < g->size(); ++i) REQUIRE(once[i] == once[g->antipode(i)]);
}

TEST_CASE("extremum location is refined off the nodes") {
  const GridPtr g = build_grid(3, 3);
  const auto t = ScalarField::sample(g, height);
  const Extremum mx = locate_extremum(*g, t.values(), ExtremumKind::kMax);
  CHECK(mx.value >= t.max());
  CHECK(mx.value == doctest::Approx(1.0).epsilon(1e-5));
  CHECK((mx.point - generic_axis()).norm() <= 1e-2);
  const Extremum mn = locate_extremum(*g, t.values(), ExtremumKind::kMin);
  CHECK(mn.value == doctest::Approx(-1.0).epsilon(1e-5));
}

TEST_CASE("scalar fields must match their grid") {
  const GridPtr g = build_grid(3, 1);
  CHECK_THROWS_AS(ScalarField(g, Eigen::VectorXd::Zero(5)), Error);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(g->size());
  v[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ScalarField(g, v), Error);
}
