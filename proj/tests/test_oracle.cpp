#include "doctest.h"
#include "support.hpp"

using namespace testing;

namespace {

using Con = LinearConstraint<double>;

PolyhedralInstance<double> polyhedron(std::vector<Con> cons, VectorXd x0) { return {std::move(cons), std::move(x0)}; }

bool satisfies(const PolyhedralInstance<double>& inst, const VectorXd& y) {
  for (const auto& c : inst.constraints) {
    const double slack = c.a.dot(y) - c.b;
    if (c.kind == Con::Kind::eq ? std::abs(slack) > 1e-12 : slack > 0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("projection onto small polyhedra") {
  auto x = qp_project(polyhedron({{vec({1, 0}), 0, Con::Kind::le}, {vec({0, 1}), 0, Con::Kind::le}}, vec({1, 1})));
  REQUIRE(x);
  CHECK(x->norm() <= 1e-14);

  x = qp_project(polyhedron({{vec({1, 0}), 0, Con::Kind::le}}, vec({-1, 2})));
  REQUIRE(x);
  CHECK(*x == vec({-1, 2}));

  x = qp_project(polyhedron({{vec({1, 1}), 1, Con::Kind::le}, {vec({1, -1}), 0, Con::Kind::eq}}, vec({2, 0})));
  REQUIRE(x);
  CHECK((*x - vec({0.5, 0.5})).norm() <= 1e-14);
  // The feasible set is the ray {(t, t) : t <= 1/2}.
  double best_t = 0, best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 200000; ++k) {
    const double t = -1.0 + 1.5 * k / 200000.0;
    const double dist = (vec({t, t}) - vec({2, 0})).squaredNorm();
    if (dist < best) best = dist, best_t = t;
  }
  CHECK(std::abs(best_t - 0.5) <= 1e-5);
}

TEST_CASE("empty polyhedra have no projection") {
  CHECK_FALSE(qp_project(polyhedron({{vec({1, 0}), -1, Con::Kind::le}, {vec({-1, 0}), -1, Con::Kind::le}}, vec({0, 0}))));
  CHECK_FALSE(qp_project(polyhedron({{vec({1, 1}), 0, Con::Kind::eq}, {vec({1, 1}), 1, Con::Kind::eq}}, vec({3, 3}))));
}

TEST_CASE("projection satisfies the variational inequality") {
  std::mt19937_64 rng(8);
  for (int sample = 0; sample < 20; ++sample) {
    const int d = 2 + sample % 5;
    const RandomInstance<double> inst = random_instance<double>(500 + sample, FixtureKind::polyhedral, 2 + sample % 4, d);
    const auto poly = to_polyhedral(ProblemSpec<double>(inst.x0, inst.terms, 0));
    REQUIRE(poly);
    const auto x = qp_project(*poly);
    REQUIRE(x);
    int tested = 0;
    for (int attempt = 0; attempt < 20000 && tested < 1000; ++attempt) {
      VectorXd y = inst.interior + random_gaussian<double>(rng, d);
      // Move y onto the hyperplanes so equality-constrained fixtures still get samples.
      for (const auto& c : poly->constraints)
        if (c.kind == Con::Kind::eq) y -= (c.a.dot(y) - c.b) / c.a.squaredNorm() * c.a;
      if (!satisfies(*poly, y)) continue;
      ++tested;
      CHECK((inst.x0 - *x).dot(y - *x) <= 1e-9 * std::max(1.0, (y - *x).norm()));
    }
    CHECK(tested >= 100);
  }
}

TEST_CASE("enumeration agrees with the primal reference solver") {
  for (int sample = 0; sample < 30; ++sample) {
    const ProblemSpec<double> spec =
        random_problem(700 + sample, FixtureKind::polyhedral, 2 + sample % 5, 2 + sample % 5, 0);
    const auto poly = to_polyhedral(spec);
    REQUIRE(poly);
    const auto x = qp_project(*poly);
    REQUIRE(x);
    const ReferenceResult<double> ref = reference_solve(spec, 1e-12);
    REQUIRE(ref.converged);
    CHECK((*x - ref.x).norm() <= 1e-7);
  }
}

TEST_CASE("boxes and affine sets convert to linear constraints") {
  using Set = SetDescriptor<double>;
  const double inf = std::numeric_limits<double>::infinity();
  MatrixXd A(1, 2);
  A << 1, 1;
  const ProblemSpec<double> spec(
      vec({3, -3}),
      {ConvexTerm<double>::indicator(Set::box(vec({-inf, -1}), vec({1, inf}))),
       ConvexTerm<double>::indicator(Set::affine(A, vec({0})))},
      0);
  const auto poly = to_polyhedral(spec);
  REQUIRE(poly);
  CHECK(poly->constraints.size() == 3);
  const auto x = qp_project(*poly);
  REQUIRE(x);
  CHECK((*x - vec({1, -1})).norm() <= 1e-14);
}

TEST_CASE("ball projections") {
  const ProblemSpec<double> one(vec({3, 4}), {ball({0, 0}, 1)}, 0);
  CHECK_FALSE(to_polyhedral(one));
  const ReferenceResult<double> single = reference_solve(one, 1e-12);
  REQUIRE(single.converged);
  CHECK((single.x - vec({0.6, 0.8})).norm() <= 1e-10);

  const ProblemSpec<double> two(vec({0, 2}), {ball({-0.5, 0}, 1), ball({0.5, 0}, 1)}, 0);
  const ReferenceResult<double> ref = reference_solve(two, 1e-12);
  REQUIRE(ref.converged);
  auto member = [](const VectorXd& p) {
    return (p - vec({-0.5, 0})).norm() <= 1 && (p - vec({0.5, 0})).norm() <= 1;
  };
  const VectorXd grid = grid_refine_2d(vec({0, 2}), member, vec({0, 0}), 1.5);
  CHECK((ref.x - grid).norm() <= 1e-6);
  CHECK((ref.x - vec({0, std::sqrt(0.75)})).norm() <= 1e-9);
}

TEST_CASE("oracle input checks") {
  std::vector<Con> many;
  for (int k = 0; k < 25; ++k) many.push_back({vec({1, 0}), double(k), Con::Kind::le});
  CHECK_THROWS_AS(qp_project(polyhedron(many, vec({0, 0}))), Error);
  const ProblemSpec<double> l1(vec({1, 1}), {ConvexTerm<double>::l1(1, 2)}, 0);
  CHECK_FALSE(to_polyhedral(l1));
  CHECK_THROWS_AS(reference_solve(l1, 1e-10), Error);
}
