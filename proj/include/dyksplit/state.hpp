#pragma once

// Problem data, dual state and the dual objective with its diagnostics.
//
// The primal problem is
//
//   min_x  sum_{i=1}^{r} h_i(x) + ((m+1)/2) ||x - x0||^2
//
// where the quadratic is split into m + 1 equal pieces. The m "copies"
// h_j(x) = 1/2 ||x - x0||^2, j = r+1..r+m, get their own dual variables, so
// a dual state holds r + m vectors. Term indices are 1-based throughout:
// 1..r are the user terms and r+1..r+m are the copies.

#include "dyksplit/terms.hpp"

#include <algorithm>
#include <utility>
#include <vector>

namespace dyksplit {

template <typename Scalar>
class ProblemSpec {
 public:
  ProblemSpec(Vector<Scalar> x0, std::vector<ConvexTerm<Scalar>> terms, int copies)
      : x0_(std::move(x0)), terms_(std::move(terms)), copies_(copies) {
    if (terms_.empty()) throw Error("problem needs at least one term");
    if (copies_ < 0) throw Error("number of quadratic copies must be nonnegative");
    for (const auto& t : terms_) require_dim(t.dim(), x0_.size(), "term");
  }

  Eigen::Index dim() const { return x0_.size(); }
  int r() const { return static_cast<int>(terms_.size()); }
  int m() const { return copies_; }
  int size() const { return r() + m(); }
  /// Weight of each of the m + 1 quadratic pieces.
  Scalar lambda() const { return Scalar(1) / Scalar(copies_ + 1); }

  const Vector<Scalar>& x0() const { return x0_; }
  const std::vector<ConvexTerm<Scalar>>& terms() const { return terms_; }
  const ConvexTerm<Scalar>& term(int i) const { return terms_.at(static_cast<std::size_t>(i - 1)); }
  bool is_copy(int i) const { return i > r(); }

  ProblemSpec with_copies(int copies) const { return ProblemSpec(x0_, terms_, copies); }

 private:
  Vector<Scalar> x0_;
  std::vector<ConvexTerm<Scalar>> terms_;
  int copies_;
};

template <typename Scalar>
struct DualState {
  std::vector<Vector<Scalar>> z;
  int n = 1;
  int w = 0;

  static DualState zeros(const ProblemSpec<Scalar>& spec) {
    DualState s;
    s.z.assign(static_cast<std::size_t>(spec.size()), Vector<Scalar>::Zero(spec.dim()));
    return s;
  }

  int size() const { return static_cast<int>(z.size()); }
  Vector<Scalar>& at(int i) { return z.at(static_cast<std::size_t>(i - 1)); }
  const Vector<Scalar>& at(int i) const { return z.at(static_cast<std::size_t>(i - 1)); }

  /// v = sum_i z_i, accumulated in index order.
  Vector<Scalar> total() const {
    Vector<Scalar> v = Vector<Scalar>::Zero(z.front().size());
    for (const auto& zi : z) v += zi;
    return v;
  }

  /// sqrt(sum_i ||z_i||^2)
  Scalar norm() const {
    Scalar s(0);
    for (const auto& zi : z) s += zi.squaredNorm();
    using std::sqrt;
    return sqrt(s);
  }

  bool all_finite() const {
    return std::all_of(z.begin(), z.end(), [](const Vector<Scalar>& zi) { return zi.allFinite(); });
  }
};

template <typename Scalar>
void check_state(const ProblemSpec<Scalar>& spec, const DualState<Scalar>& state) {
  require_dim(state.size(), spec.size(), "dual state length");
  for (const auto& zi : state.z) require_dim(zi.size(), spec.dim(), "dual vector");
}

/// x = x0 - v
template <typename Scalar>
Vector<Scalar> primal_estimate(const ProblemSpec<Scalar>& spec, const DualState<Scalar>& state) {
  return spec.x0() - state.total();
}

/// Conjugate of a quadratic copy: 1/2 ||z + x0||^2 - 1/2 ||x0||^2.
template <typename Scalar>
Scalar copy_conjugate(const Vector<Scalar>& x0, const Vector<Scalar>& z) {
  return Scalar(0.5) * z.squaredNorm() + x0.dot(z);
}

/// h_i^*(z) for any index, copies included.
template <typename Scalar>
Scalar conjugate_at(const ProblemSpec<Scalar>& spec, int i, const Vector<Scalar>& z) {
  if (spec.is_copy(i)) return copy_conjugate(spec.x0(), z);
  return eval_conj(spec.term(i), z);
}

/// h_i(x) for any index, copies included.
template <typename Scalar>
Scalar value_at(const ProblemSpec<Scalar>& spec, int i, const Vector<Scalar>& x) {
  if (spec.is_copy(i)) return Scalar(0.5) * (x - spec.x0()).squaredNorm();
  return eval(spec.term(i), x);
}

/// F(z) = -sum_i h_i^*(z_i) - (1/2 ||x0 - v||^2 - 1/2 ||x0||^2); -inf off the domain.
template <typename Scalar>
Scalar dual_objective(const ProblemSpec<Scalar>& spec, const DualState<Scalar>& state) {
  check_state(spec, state);
  Scalar f(0);
  for (int i = 1; i <= spec.size(); ++i) {
    const Scalar c = conjugate_at(spec, i, state.at(i));
    if (!is_finite(c)) return -infinity<Scalar>();
    f -= c;
  }
  const Vector<Scalar> v = state.total();
  f -= Scalar(0.5) * v.squaredNorm() - spec.x0().dot(v);
  return f;
}

/// The same objective assembled from the scaled form
///   F(z) = -sum_{i<=r} h_i^*(z_i) - sum_{j>r} lambda g^*(z_j / lambda) - lambda g^*(-v / lambda)
/// with g(x) = ((m+1)/2) ||x - x0||^2, whose conjugate is ||y||^2 / (2(m+1)) + <x0, y>.
template <typename Scalar>
Scalar dual_objective_scaled(const ProblemSpec<Scalar>& spec, const DualState<Scalar>& state) {
  check_state(spec, state);
  const Scalar lambda = spec.lambda();
  const Scalar mp1 = Scalar(spec.m() + 1);
  auto g_conj = [&](const Vector<Scalar>& y) { return y.squaredNorm() / (Scalar(2) * mp1) + spec.x0().dot(y); };
  Scalar f(0);
  for (int i = 1; i <= spec.r(); ++i) {
    const Scalar c = eval_conj(spec.term(i), state.at(i));
    if (!is_finite(c)) return -infinity<Scalar>();
    f -= c;
  }
  for (int j = spec.r() + 1; j <= spec.size(); ++j) f -= lambda * g_conj(state.at(j) / lambda);
  f -= lambda * g_conj(-state.total() / lambda);
  return f;
}

/// Primal objective value of the split problem at x (all r + m terms plus 1/2||x - x0||^2).
template <typename Scalar>
Scalar primal_objective(const ProblemSpec<Scalar>& spec, const Vector<Scalar>& x) {
  Scalar primal = Scalar(0.5) * (spec.x0() - x).squaredNorm();
  for (int i = 1; i <= spec.size(); ++i) primal += value_at(spec, i, x);
  return primal;
}

template <typename Scalar>
struct GapReport {
  Scalar dual_value;
  Scalar primal_value;
  Scalar gap_lower_bound;
  /// primal - dual >= lower bound - 1e-8 (trivially true when primal is infinite).
  bool inequality_holds;

  Scalar gap() const { return primal_value - dual_value; }
};

/// Both sides of
///   1/2||x0 - x||^2 + sum_i h_i(x) - F(z)  >=  1/2 ||x0 - x - v||^2  >=  0
/// where the sum runs over all r + m terms.
template <typename Scalar>
GapReport<Scalar> gap_report(const ProblemSpec<Scalar>& spec, const DualState<Scalar>& state,
                             const Vector<Scalar>& x) {
  require_dim(x.size(), spec.dim(), "gap candidate");
  GapReport<Scalar> out{};
  out.dual_value = dual_objective(spec, state);
  const Scalar primal = primal_objective(spec, x);
  out.primal_value = primal;
  out.gap_lower_bound = Scalar(0.5) * (spec.x0() - x - state.total()).squaredNorm();
  out.inequality_holds = !is_finite(primal) || !is_finite(out.dual_value) ||
                         primal - out.dual_value >= out.gap_lower_bound - Scalar(1e-8);
  return out;
}

/// h_i(x) + h_i^*(z_i) - <x, z_i>, clamped at zero; +inf when either value is infinite.
template <typename Scalar>
Scalar fenchel_residual(const ProblemSpec<Scalar>& spec, int i, const Vector<Scalar>& zi,
                        const Vector<Scalar>& x) {
  if (i < 1 || i > spec.size()) throw Error("term index " + std::to_string(i) + " out of range");
  const Scalar h = value_at(spec, i, x);
  const Scalar hc = conjugate_at(spec, i, zi);
  if (!is_finite(h) || !is_finite(hc)) return infinity<Scalar>();
  return std::max(Scalar(0), h + hc - x.dot(zi));
}

template <typename Scalar>
Scalar fenchel_residual(const ProblemSpec<Scalar>& spec, const DualState<Scalar>& state, int i,
                        const Vector<Scalar>& x) {
  return fenchel_residual(spec, i, state.at(i), x);
}

/// Minimizer of the copy duals for fixed user duals summing to zbar_sum:
/// z_j = -lambda * zbar_sum for every copy.
template <typename Scalar>
std::vector<Vector<Scalar>> direct_d1_d2_minimizer(const ProblemSpec<Scalar>& spec,
                                                  const Vector<Scalar>& zbar_sum) {
  require_dim(zbar_sum.size(), spec.dim(), "dual sum");
  return std::vector<Vector<Scalar>>(static_cast<std::size_t>(spec.m()), -spec.lambda() * zbar_sum);
}

}  // namespace dyksplit
