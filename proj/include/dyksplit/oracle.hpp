#pragma once

// Ground-truth solvers for small instances: exact projection onto a
// polyhedron by active-set enumeration, and a long-running textbook Dykstra
// projection for sets without a polyhedral description.

#include "dyksplit/state.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace dyksplit {

template <typename Scalar>
struct LinearConstraint {
  enum class Kind { eq, le };
  Vector<Scalar> a;
  Scalar b;
  Kind kind;
};

template <typename Scalar>
struct PolyhedralInstance {
  std::vector<LinearConstraint<Scalar>> constraints;
  Vector<Scalar> x0;
};

inline constexpr std::size_t kMaxEnumeratedConstraints = 24;

/// Polyhedral form of an all-indicator problem; empty if any set is a ball.
template <typename Scalar>
std::optional<PolyhedralInstance<Scalar>> to_polyhedral(const ProblemSpec<Scalar>& spec) {
  using C = LinearConstraint<Scalar>;
  PolyhedralInstance<Scalar> out{{}, spec.x0()};
  for (const auto& term : spec.terms()) {
    if (!term.is_indicator() || !term.set().is_polyhedral()) return std::nullopt;
    const auto& kind = term.set().kind();
    if (const auto* h = std::get_if<Halfspace<Scalar>>(&kind)) {
      out.constraints.push_back({h->normal, h->offset, C::Kind::le});
    } else if (const auto* e = std::get_if<Hyperplane<Scalar>>(&kind)) {
      out.constraints.push_back({e->normal, e->offset, C::Kind::eq});
    } else if (const auto* box = std::get_if<Box<Scalar>>(&kind)) {
      for (Eigen::Index k = 0; k < spec.dim(); ++k) {
        Vector<Scalar> unit = Vector<Scalar>::Unit(spec.dim(), k);
        if (box->upper[k] < infinity<Scalar>()) out.constraints.push_back({unit, box->upper[k], C::Kind::le});
        if (box->lower[k] > -infinity<Scalar>()) out.constraints.push_back({Vector<Scalar>(-unit), -box->lower[k], C::Kind::le});
      }
    } else if (const auto* aff = std::get_if<AffineSubspace<Scalar>>(&kind)) {
      for (Eigen::Index k = 0; k < aff->matrix().rows(); ++k)
        out.constraints.push_back({aff->matrix().row(k).transpose(), aff->rhs()[k], C::Kind::eq});
    }
  }
  return out;
}

/// Euclidean projection of x0 onto the polyhedron, or empty when no active
/// set yields a feasible KKT point (the polyhedron is empty).
template <typename Scalar>
std::optional<Vector<Scalar>> qp_project(const PolyhedralInstance<Scalar>& inst) {
  using C = LinearConstraint<Scalar>;
  const auto& cons = inst.constraints;
  if (cons.size() > kMaxEnumeratedConstraints)
    throw Error("active-set enumeration supports at most " + std::to_string(kMaxEnumeratedConstraints) + " constraints");
  const Eigen::Index d = inst.x0.size();
  std::vector<std::size_t> eqs, les;
  for (std::size_t k = 0; k < cons.size(); ++k) {
    require_dim(cons[k].a.size(), d, "constraint normal");
    (cons[k].kind == C::Kind::eq ? eqs : les).push_back(k);
  }
  const Scalar tol = Scalar(kFeasTol);
  auto feasible = [&](const Vector<Scalar>& x) {
    for (const auto& c : cons) {
      const Scalar scale = std::max(Scalar(1), c.a.norm());
      const Scalar slack = c.a.dot(x) - c.b;
      if (c.kind == C::Kind::eq ? std::abs(slack) > tol * scale : slack > tol * scale) return false;
    }
    return true;
  };

  const std::uint32_t subsets = std::uint32_t(1) << les.size();
  for (std::uint32_t mask = 0; mask < subsets; ++mask) {
    std::vector<std::size_t> active = eqs;
    for (std::size_t k = 0; k < les.size(); ++k)
      if (mask & (std::uint32_t(1) << k)) active.push_back(les[k]);
    if (static_cast<Eigen::Index>(active.size()) > d) continue;

    Vector<Scalar> x = inst.x0;
    Vector<Scalar> mu;
    if (!active.empty()) {
      const Eigen::Index rows = static_cast<Eigen::Index>(active.size());
      Matrix<Scalar> N(rows, d);
      Vector<Scalar> rhs(rows);
      for (Eigen::Index k = 0; k < rows; ++k) {
        N.row(k) = cons[active[static_cast<std::size_t>(k)]].a.transpose();
        rhs[k] = cons[active[static_cast<std::size_t>(k)]].b;
      }
      Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(N.transpose());
      qr.setThreshold(Scalar(kRankTol));
      if (qr.rank() < rows) continue;
      const Matrix<Scalar> gram = N * N.transpose();
      mu = gram.ldlt().solve(N * inst.x0 - rhs);
      x = inst.x0 - N.transpose() * mu;
    }
    if (!feasible(x)) continue;
    bool dual_ok = true;
    for (std::size_t k = eqs.size(); k < active.size(); ++k)
      if (mu[static_cast<Eigen::Index>(k)] < -tol) dual_ok = false;
    if (dual_ok) return x;
  }
  return std::nullopt;
}

template <typename Scalar>
struct ReferenceResult {
  Vector<Scalar> x;
  bool converged = false;
  long cycles = 0;
  Scalar last_change = 0;
};

inline constexpr long kReferenceCycleCap = 1000000;

/// Primal Dykstra projection of x0 onto the intersection of the indicator
/// sets, run until an entire cycle moves x by less than tol * 1e-2.
template <typename Scalar>
ReferenceResult<Scalar> reference_solve(const ProblemSpec<Scalar>& spec, Scalar tol,
                                        long max_cycles = kReferenceCycleCap) {
  for (const auto& t : spec.terms())
    if (!t.is_indicator()) throw Error("reference solver needs set indicators");
  const std::size_t r = spec.terms().size();
  ReferenceResult<Scalar> out;
  out.x = spec.x0();
  std::vector<Vector<Scalar>> increments(r, Vector<Scalar>::Zero(spec.dim()));
  const Scalar threshold = tol * Scalar(1e-2);
  for (out.cycles = 1; out.cycles <= max_cycles; ++out.cycles) {
    const Vector<Scalar> start = out.x;
    for (std::size_t i = 0; i < r; ++i) {
      const Vector<Scalar> y = out.x + increments[i];
      out.x = project(spec.terms()[i].set(), y);
      increments[i] = y - out.x;
    }
    out.last_change = (out.x - start).norm();
    if (!out.x.allFinite()) break;
    if (out.last_change < threshold && out.cycles > 1) {
      out.converged = true;
      return out;
    }
  }
  out.cycles = std::min(out.cycles, max_cycles);
  return out;
}

}  // namespace dyksplit
