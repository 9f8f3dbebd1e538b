#pragma once

// Closed-form oracles for the convex terms the solver supports: set
// indicators (halfspace, hyperplane, box, Euclidean ball, affine subspace),
// the weighted l1 norm and a weighted squared distance.
//
// Each term exposes its value, its Fenchel conjugate and its proximal map.
// All oracles are pure functions of immutable term data.

#include "dyksplit/common.hpp"

#include <algorithm>
#include <string>
#include <utility>
#include <variant>

namespace dyksplit {

/// {x : <normal, x> <= offset}
template <typename Scalar>
struct Halfspace {
  Vector<Scalar> normal;
  Scalar offset;
};

/// {x : <normal, x> = offset}
template <typename Scalar>
struct Hyperplane {
  Vector<Scalar> normal;
  Scalar offset;
};

template <typename Scalar>
struct Box {
  Vector<Scalar> lower;
  Vector<Scalar> upper;
};

template <typename Scalar>
struct Ball {
  Vector<Scalar> center;
  Scalar radius;
};

/// {x : A x = c} with A of full row rank. A thin QR factorization
/// A^T = Q R is computed once; projections work in the orthonormal basis Q.
template <typename Scalar>
class AffineSubspace {
 public:
  AffineSubspace(Matrix<Scalar> A, Vector<Scalar> c) : A_(std::move(A)), c_(std::move(c)) {
    require_dim(c_.size(), A_.rows(), "affine right-hand side");
    if (A_.rows() == 0) throw Error("affine set needs at least one row");
    Eigen::ColPivHouseholderQR<Matrix<Scalar>> rank_check(A_.transpose());
    rank_check.setThreshold(Scalar(kRankTol));
    if (rank_check.rank() != A_.rows()) {
      throw Error("affine constraint matrix is rank deficient (rank " +
                  std::to_string(rank_check.rank()) + " < " + std::to_string(A_.rows()) + ")");
    }
    const Eigen::Index k = A_.rows();
    Eigen::HouseholderQR<Matrix<Scalar>> qr(A_.transpose());
    basis_ = qr.householderQ() * Matrix<Scalar>::Identity(A_.cols(), k);
    r_ = qr.matrixQR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
    // A x = c  <=>  Q^T x = R^{-T} c
    target_ = r_.transpose().template triangularView<Eigen::Lower>().solve(c_);
  }

  const Matrix<Scalar>& matrix() const { return A_; }
  const Vector<Scalar>& rhs() const { return c_; }

  /// Least-squares solution y of A^T y = z.
  Vector<Scalar> row_coordinates(const Vector<Scalar>& z) const {
    return r_.template triangularView<Eigen::Upper>().solve(Vector<Scalar>(basis_.transpose() * z));
  }

  Vector<Scalar> project(const Vector<Scalar>& u) const {
    return u - basis_ * (basis_.transpose() * u - target_);
  }

 private:
  Matrix<Scalar> A_;
  Vector<Scalar> c_;
  Matrix<Scalar> basis_;
  Matrix<Scalar> r_;
  Vector<Scalar> target_;
};

template <typename Scalar>
class SetDescriptor {
 public:
  using Kind = std::variant<Halfspace<Scalar>, Hyperplane<Scalar>, Box<Scalar>, Ball<Scalar>,
                            AffineSubspace<Scalar>>;

  static SetDescriptor halfspace(Vector<Scalar> normal, Scalar offset) {
    check_normal(normal);
    return SetDescriptor(Halfspace<Scalar>{std::move(normal), offset});
  }
  static SetDescriptor hyperplane(Vector<Scalar> normal, Scalar offset) {
    check_normal(normal);
    return SetDescriptor(Hyperplane<Scalar>{std::move(normal), offset});
  }
  static SetDescriptor box(Vector<Scalar> lower, Vector<Scalar> upper) {
    require_dim(upper.size(), lower.size(), "box bounds");
    if ((lower.array() > upper.array()).any()) throw Error("box requires lower <= upper");
    return SetDescriptor(Box<Scalar>{std::move(lower), std::move(upper)});
  }
  static SetDescriptor ball(Vector<Scalar> center, Scalar radius) {
    if (!(radius >= Scalar(0))) throw Error("ball radius must be nonnegative");
    return SetDescriptor(Ball<Scalar>{std::move(center), radius});
  }
  static SetDescriptor affine(Matrix<Scalar> A, Vector<Scalar> c) {
    return SetDescriptor(AffineSubspace<Scalar>(std::move(A), std::move(c)));
  }

  const Kind& kind() const { return kind_; }

  Eigen::Index dim() const {
    return std::visit(
        [](const auto& s) -> Eigen::Index {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Box<Scalar>>) return s.lower.size();
          else if constexpr (std::is_same_v<T, Ball<Scalar>>) return s.center.size();
          else if constexpr (std::is_same_v<T, AffineSubspace<Scalar>>) return s.matrix().cols();
          else return s.normal.size();
        },
        kind_);
  }

  std::string name() const {
    static const char* names[] = {"halfspace", "hyperplane", "box", "ball", "affine"};
    return names[kind_.index()];
  }

  bool is_polyhedral() const { return !std::holds_alternative<Ball<Scalar>>(kind_); }

 private:
  explicit SetDescriptor(Kind kind) : kind_(std::move(kind)) {}

  static void check_normal(const Vector<Scalar>& normal) {
    if (!(normal.norm() > Scalar(0))) throw Error("constraint normal must be nonzero");
  }

  Kind kind_;
};

/// Euclidean projection onto a set.
template <typename Scalar>
Vector<Scalar> project(const SetDescriptor<Scalar>& set, const Vector<Scalar>& u) {
  require_dim(u.size(), set.dim(), "projection argument");
  return std::visit(
      [&](const auto& s) -> Vector<Scalar> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Halfspace<Scalar>>) {
          const Scalar excess = s.normal.dot(u) - s.offset;
          if (excess <= Scalar(0)) return u;
          return u - (excess / s.normal.squaredNorm()) * s.normal;
        } else if constexpr (std::is_same_v<T, Hyperplane<Scalar>>) {
          return u - ((s.normal.dot(u) - s.offset) / s.normal.squaredNorm()) * s.normal;
        } else if constexpr (std::is_same_v<T, Box<Scalar>>) {
          return u.cwiseMax(s.lower).cwiseMin(s.upper);
        } else if constexpr (std::is_same_v<T, Ball<Scalar>>) {
          const Vector<Scalar> offset = u - s.center;
          const Scalar dist = offset.norm();
          if (dist <= s.radius) return u;
          return s.center + (s.radius / dist) * offset;
        } else {
          return s.project(u);
        }
      },
      set.kind());
}

/// Support function sigma_C(z) = sup_{x in C} <z, x>, +inf off its domain.
template <typename Scalar>
Scalar support(const SetDescriptor<Scalar>& set, const Vector<Scalar>& z) {
  require_dim(z.size(), set.dim(), "support argument");
  const Scalar scale = std::max(Scalar(1), z.norm());
  return std::visit(
      [&](const auto& s) -> Scalar {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Halfspace<Scalar>> || std::is_same_v<T, Hyperplane<Scalar>>) {
          const Scalar coef = s.normal.dot(z) / s.normal.squaredNorm();
          if ((z - coef * s.normal).norm() / scale > Scalar(kDomTol)) return infinity<Scalar>();
          if constexpr (std::is_same_v<T, Halfspace<Scalar>>) {
            if (coef < -Scalar(kDomTol)) return infinity<Scalar>();
          }
          return coef * s.offset;
        } else if constexpr (std::is_same_v<T, Box<Scalar>>) {
          return (z.array() >= Scalar(0))
              .select(z.array() * s.upper.array(), z.array() * s.lower.array())
              .sum();
        } else if constexpr (std::is_same_v<T, Ball<Scalar>>) {
          return s.center.dot(z) + s.radius * z.norm();
        } else {
          const Vector<Scalar> y = s.row_coordinates(z);
          if ((z - s.matrix().transpose() * y).norm() / scale > Scalar(kDomTol)) return infinity<Scalar>();
          return s.rhs().dot(y);
        }
      },
      set.kind());
}

template <typename Scalar>
struct L1Norm {
  Scalar weight;
};

/// (weight / 2) * ||x - center||^2
template <typename Scalar>
struct SquaredDistance {
  Vector<Scalar> center;
  Scalar weight;
};

template <typename Scalar>
class ConvexTerm {
 public:
  using Kind = std::variant<SetDescriptor<Scalar>, L1Norm<Scalar>, SquaredDistance<Scalar>>;

  static ConvexTerm indicator(SetDescriptor<Scalar> set) {
    const Eigen::Index d = set.dim();
    return ConvexTerm(std::move(set), d);
  }
  static ConvexTerm l1(Scalar weight, Eigen::Index dim) {
    if (!(weight > Scalar(0))) throw Error("l1 weight must be positive");
    return ConvexTerm(L1Norm<Scalar>{weight}, dim);
  }
  static ConvexTerm quadratic(Vector<Scalar> center, Scalar weight) {
    if (!(weight > Scalar(0))) throw Error("quadratic weight must be positive");
    const Eigen::Index d = center.size();
    return ConvexTerm(SquaredDistance<Scalar>{std::move(center), weight}, d);
  }

  const Kind& kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }

  bool is_indicator() const { return std::holds_alternative<SetDescriptor<Scalar>>(kind_); }
  const SetDescriptor<Scalar>& set() const { return std::get<SetDescriptor<Scalar>>(kind_); }

  std::string name() const {
    if (is_indicator()) return set().name();
    return std::holds_alternative<L1Norm<Scalar>>(kind_) ? "l1" : "quadratic";
  }

 private:
  ConvexTerm(Kind kind, Eigen::Index dim) : kind_(std::move(kind)), dim_(dim) {}

  Kind kind_;
  Eigen::Index dim_;
};

template <typename Scalar>
Vector<Scalar> soft_threshold(const Vector<Scalar>& u, Scalar level) {
  return u.unaryExpr([level](Scalar v) {
    using std::abs;
    const Scalar mag = abs(v) - level;
    return mag > Scalar(0) ? (v > Scalar(0) ? mag : -mag) : Scalar(0);
  });
}

/// h(x); +inf exactly when x is farther than kFeasTol from an indicator's set.
template <typename Scalar>
Scalar eval(const ConvexTerm<Scalar>& term, const Vector<Scalar>& x) {
  require_dim(x.size(), term.dim(), "term argument");
  return std::visit(
      [&](const auto& t) -> Scalar {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, SetDescriptor<Scalar>>) {
          return (x - project(t, x)).norm() <= Scalar(kFeasTol) ? Scalar(0) : infinity<Scalar>();
        } else if constexpr (std::is_same_v<T, L1Norm<Scalar>>) {
          return t.weight * x.template lpNorm<1>();
        } else {
          return Scalar(0.5) * t.weight * (x - t.center).squaredNorm();
        }
      },
      term.kind());
}

/// argmin_x t h(x) + 1/2 ||x - u||^2. For indicators the result does not depend on t.
template <typename Scalar>
Vector<Scalar> prox(const ConvexTerm<Scalar>& term, const Vector<Scalar>& u, Scalar t) {
  require_dim(u.size(), term.dim(), "prox argument");
  if (!(t > Scalar(0))) throw Error("prox step must be positive");
  return std::visit(
      [&](const auto& h) -> Vector<Scalar> {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, SetDescriptor<Scalar>>) {
          return project(h, u);
        } else if constexpr (std::is_same_v<T, L1Norm<Scalar>>) {
          return soft_threshold<Scalar>(u, t * h.weight);
        } else {
          const Scalar tw = t * h.weight;
          return (u + tw * h.center) / (Scalar(1) + tw);
        }
      },
      term.kind());
}

/// h*(z) = sup_x <z, x> - h(x).
template <typename Scalar>
Scalar eval_conj(const ConvexTerm<Scalar>& term, const Vector<Scalar>& z) {
  require_dim(z.size(), term.dim(), "conjugate argument");
  return std::visit(
      [&](const auto& h) -> Scalar {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, SetDescriptor<Scalar>>) {
          return support(h, z);
        } else if constexpr (std::is_same_v<T, L1Norm<Scalar>>) {
          // indicator of the l-infinity ball of radius weight
          const Scalar w = h.weight;
          const Scalar slack = Scalar(kDomTol) * std::max(Scalar(1), w);
          return z.template lpNorm<Eigen::Infinity>() <= w + slack ? Scalar(0) : infinity<Scalar>();
        } else {
          return h.center.dot(z) + z.squaredNorm() / (Scalar(2) * h.weight);
        }
      },
      term.kind());
}

/// u - prox(h, u, 1): the minimizer of h*(z) + 1/2 ||z - u||^2.
template <typename Scalar>
Vector<Scalar> moreau_dual(const ConvexTerm<Scalar>& term, const Vector<Scalar>& u) {
  return u - prox(term, u, Scalar(1));
}

/// argmin_z h*(z) + 1/(2 tau) ||z - u||^2, via u - tau prox_{h/tau}(u / tau).
template <typename Scalar>
Vector<Scalar> scaled_moreau_dual(const ConvexTerm<Scalar>& term, const Vector<Scalar>& u, Scalar tau) {
  if (tau == Scalar(1)) return moreau_dual(term, u);
  return u - tau * prox(term, Vector<Scalar>(u / tau), Scalar(1) / tau);
}

}  // namespace dyksplit
