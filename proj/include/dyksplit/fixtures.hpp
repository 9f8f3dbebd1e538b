#pragma once

// Random instances with a known interior point, so the intersection is never
// empty. The anchor x0 is pushed away from that point so some constraints end
// up active at the projection.

#include "dyksplit/terms.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace dyksplit {

enum class FixtureKind { halfspaces, balls, mixed, polyhedral };

inline FixtureKind parse_fixture_kind(const std::string& name) {
  if (name == "halfspaces") return FixtureKind::halfspaces;
  if (name == "balls") return FixtureKind::balls;
  if (name == "mixed") return FixtureKind::mixed;
  if (name == "polyhedral") return FixtureKind::polyhedral;
  throw Error("unknown random problem kind '" + name + "'");
}

inline std::string fixture_kind_name(FixtureKind kind) {
  switch (kind) {
    case FixtureKind::halfspaces: return "halfspaces";
    case FixtureKind::balls: return "balls";
    case FixtureKind::mixed: return "mixed";
    case FixtureKind::polyhedral: return "polyhedral";
  }
  return "";
}

template <typename Scalar>
struct RandomInstance {
  Vector<Scalar> x0;
  Vector<Scalar> interior;
  std::vector<ConvexTerm<Scalar>> terms;
};

template <typename Scalar>
Vector<Scalar> random_gaussian(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector<Scalar> v(d);
  for (Eigen::Index k = 0; k < d; ++k) v[k] = Scalar(normal(rng));
  return v;
}

template <typename Scalar>
Vector<Scalar> random_unit(std::mt19937_64& rng, Eigen::Index d) {
  Vector<Scalar> v = random_gaussian<Scalar>(rng, d);
  while (v.norm() < Scalar(1e-3)) v = random_gaussian<Scalar>(rng, d);
  return v / v.norm();
}

/// r sets in dimension d, all containing a common point near the origin.
/// The polyhedral kind adds one hyperplane through that point when r >= 3.
template <typename Scalar>
RandomInstance<Scalar> random_instance(std::uint64_t seed, FixtureKind kind, int r, int d) {
  if (r < 1 || d < 1) throw Error("random instance needs r >= 1 and d >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  RandomInstance<Scalar> out;
  out.interior = Scalar(0.3) * random_gaussian<Scalar>(rng, d);
  out.x0 = out.interior + Scalar(2 + 2 * uniform(rng)) * random_unit<Scalar>(rng, d);

  for (int i = 0; i < r; ++i) {
    bool ball = kind == FixtureKind::balls || (kind == FixtureKind::mixed && uniform(rng) < 0.5);
    if (ball) {
      const Vector<Scalar> center = out.interior + Scalar(1 + uniform(rng)) * random_unit<Scalar>(rng, d);
      const Scalar radius = (center - out.interior).norm() + Scalar(0.1 + 0.4 * uniform(rng));
      out.terms.push_back(ConvexTerm<Scalar>::indicator(SetDescriptor<Scalar>::ball(center, radius)));
      continue;
    }
    // Normals lean toward x0 so most halfspaces cut it off.
    Vector<Scalar> normal = random_unit<Scalar>(rng, d) + (out.x0 - out.interior).normalized();
    if (normal.norm() < Scalar(1e-3)) normal = random_unit<Scalar>(rng, d);
    normal.normalize();
    if (kind == FixtureKind::polyhedral && r >= 3 && i == r - 1) {
      out.terms.push_back(
          ConvexTerm<Scalar>::indicator(SetDescriptor<Scalar>::hyperplane(normal, normal.dot(out.interior))));
      continue;
    }
    const Scalar offset = normal.dot(out.interior) + Scalar(0.5 * uniform(rng));
    out.terms.push_back(ConvexTerm<Scalar>::indicator(SetDescriptor<Scalar>::halfspace(normal, offset)));
  }
  return out;
}

}  // namespace dyksplit
