#pragma once

#include "dyksplit/engine.hpp"
#include "dyksplit/fixtures.hpp"
#include "dyksplit/oracle.hpp"

#include <cstring>
#include <functional>
#include <random>
#include <set>

namespace testing {

using namespace dyksplit;

inline VectorXd vec(std::initializer_list<double> values) {
  VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index k = 0;
  for (double x : values) v[k++] = x;
  return v;
}

inline ConvexTerm<double> halfspace(std::initializer_list<double> a, double b) {
  return ConvexTerm<double>::indicator(SetDescriptor<double>::halfspace(vec(a), b));
}

inline ConvexTerm<double> ball(std::initializer_list<double> c, double radius) {
  return ConvexTerm<double>::indicator(SetDescriptor<double>::ball(vec(c), radius));
}

/// {x1 <= 0} and {x2 <= 0} with x0 = (1, 1); the projection is the origin.
inline ProblemSpec<double> two_halfspaces(int m = 0) {
  return ProblemSpec<double>(vec({1, 1}), {halfspace({1, 0}, 0), halfspace({0, 1}, 0)}, m);
}

/// Three halfspaces in the plane with normals at 0, 100 and 215 degrees,
/// shifted so x0 is cut off by more than one of them.
inline ProblemSpec<double> three_halfspaces(int m = 0) {
  const double pi = 3.14159265358979323846;
  std::vector<ConvexTerm<double>> terms;
  for (double deg : {0.0, 100.0, 215.0}) {
    const double t = deg * pi / 180.0;
    VectorXd a(2);
    a << std::cos(t), std::sin(t);
    terms.push_back(ConvexTerm<double>::indicator(SetDescriptor<double>::halfspace(a, 0.5)));
  }
  return ProblemSpec<double>(vec({2.0, 1.5}), terms, m);
}

/// Two unit balls touching at the origin. The intersection is a single point,
/// so the dual optimum is not attained.
inline ProblemSpec<double> tangent_balls(int m = 0) {
  return ProblemSpec<double>(vec({0, 1}), {ball({-1, 0}, 1), ball({1, 0}, 1)}, m);
}

inline ProblemSpec<double> random_problem(std::uint64_t seed, FixtureKind kind, int r, int d, int m) {
  RandomInstance<double> inst = random_instance<double>(seed, kind, r, d);
  return ProblemSpec<double>(inst.x0, inst.terms, m);
}

/// Valid mixed schedule with m >= 1 copies and r > m user terms: all copies
/// jointly, then each term m+1..r alone, then blocks {i, r+i} for i = 1..m.
inline CyclePlan staggered_schedule(int r, int m) {
  CyclePlan plan;
  SweepPlan first;
  for (int j = r + 1; j <= r + m; ++j) first.outer.push_back(j);
  plan.pattern.push_back(first);
  for (int i = m + 1; i <= r; ++i) plan.pattern.push_back(SweepPlan{{i}, {}});
  SweepPlan last;
  for (int i = 1; i <= m; ++i) last.inner[r + i] = {i, r + i};
  plan.pattern.push_back(last);
  return plan;
}

/// r = 2, m = 2: the inner blocks in sweeps 3 and 4 use copy 3 after it was
/// solved in sweep 1, and sweep 2 touches index 1 in between.
inline CyclePlan deferral_fixture_invalid() {
  CyclePlan plan;
  plan.pattern = {SweepPlan{{3}, {}}, SweepPlan{{1}, {}}, SweepPlan{{2}, {{3, {1, 3}}}}, SweepPlan{{4}, {{3, {2, 3}}}}};
  return plan;
}

/// The same subproblems with the inner blocks moved to the front.
inline CyclePlan deferral_fixture_valid() {
  CyclePlan plan;
  plan.pattern = {SweepPlan{{}, {{3, {1, 3}}}}, SweepPlan{{}, {{3, {2, 3}}}}, SweepPlan{{3}, {}},
                  SweepPlan{{1}, {}},           SweepPlan{{2}, {}},           SweepPlan{{4}, {}}};
  return plan;
}

/// r = 3, m = 3 with two independent blocks that both break condition B.
inline CyclePlan two_block_fixture_invalid() {
  CyclePlan plan;
  plan.pattern = {SweepPlan{{4, 5}, {}}, SweepPlan{{1, 2}, {}}, SweepPlan{{3}, {{4, {1, 4}}, {5, {2, 5}}}},
                  SweepPlan{{6}, {}}};
  return plan;
}

/// Grid refinement for min ||x - x0|| over a closed planar set given by a
/// membership test, starting from a box known to contain the minimizer.
inline VectorXd grid_refine_2d(const VectorXd& x0, const std::function<bool(const VectorXd&)>& member,
                               VectorXd center, double half_width, double final_width = 1e-10) {
  constexpr int steps = 100;
  while (half_width > final_width) {
    const double h = 2 * half_width / steps;
    VectorXd best = center;
    double best_dist = member(center) ? (center - x0).norm() : std::numeric_limits<double>::infinity();
    for (int a = 0; a <= steps; ++a)
      for (int b = 0; b <= steps; ++b) {
        VectorXd p = center;
        p[0] += -half_width + a * h;
        p[1] += -half_width + b * h;
        const double dist = (p - x0).norm();
        if (dist < best_dist && member(p)) {
          best = p;
          best_dist = dist;
        }
      }
    center = best;
    half_width = 2 * h;
  }
  return center;
}

/// Dual states whose user duals lie in the conjugate domains.
inline DualState<double> random_domain_state(const ProblemSpec<double>& spec, std::mt19937_64& rng) {
  DualState<double> s = DualState<double>::zeros(spec);
  for (int i = 1; i <= spec.size(); ++i) {
    const VectorXd u = 2.0 * random_gaussian<double>(rng, spec.dim());
    s.at(i) = spec.is_copy(i) ? u : moreau_dual(spec.term(i), u);
  }
  return s;
}

inline bool bitwise_equal(const VectorXd& a, const VectorXd& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

inline bool bitwise_equal(const DualState<double>& a, const DualState<double>& b) {
  if (a.size() != b.size()) return false;
  for (int i = 1; i <= a.size(); ++i)
    if (!bitwise_equal(a.at(i), b.at(i))) return false;
  return true;
}

inline VectorXd oracle_projection(const ProblemSpec<double>& spec) {
  if (auto poly = to_polyhedral(spec)) {
    auto x = qp_project(*poly);
    if (!x) throw Error("fixture is infeasible");
    return *x;
  }
  ReferenceResult<double> ref = reference_solve(spec, 1e-12);
  if (!ref.converged) throw Error("reference solver did not converge");
  return ref.x;
}

}  // namespace testing
