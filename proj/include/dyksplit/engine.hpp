#pragma once

// Dual block-coordinate engine.
//
// Each cycle runs a fixed number of sweeps. In a sweep the outer set is
// minimized jointly against the remaining duals, and every inner block S'_j
// is minimized under the constraint that its sum stays fixed. All of these
// subproblems read the same snapshot of the state: the outer problem only
// sees the complement through its sum, and inner blocks preserve their sums,
// so they can run concurrently and be merged in index order.
//
// Closed-form tiers:
//   outer, copies only         z_j = -c / (k + 1), c the complement sum
//   outer, one term + k copies one scaled prox, copies redistributed
//   inner block {i, j}         one prox, z_j recovered from the block sum
// Anything larger falls back to nested cyclic coordinate minimization and is
// flagged approximate in the trace.

#include "dyksplit/schedule.hpp"
#include "dyksplit/state.hpp"
#include "dyksplit/task_pool.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace dyksplit {

enum class CheckLevel { off, sweep, full };

struct SolveParams {
  int max_iterations = 1000;
  /// Stop once primal(x0 - v) - best F drops to this value; <= 0 disables.
  double stop_gap = 1e-12;
  int nested_bcm_sweeps = 200;
  double nested_tol = 1e-14;
  int workers = 1;
  CheckLevel check_level = CheckLevel::sweep;
  bool per_sweep_trace = false;
  bool allow_invalid_schedule = false;
  bool record_cycle_duals = false;
};

// Tolerances the runtime checks are held to.
inline constexpr double kAscentTol = 1e-10;
inline constexpr double kAscentMarginTol = 1e-8;
inline constexpr double kCertFenchelTol = 1e-8;
inline constexpr double kCertBoundTol = 1e-9;
inline constexpr double kClaimTol = 1e-8;
inline constexpr double kBlockSumTol = 1e-12;

template <typename Scalar>
struct BlockUpdate {
  std::vector<std::pair<int, Vector<Scalar>>> values;
  bool approximate = false;
};

template <typename Scalar>
struct TraceRow {
  int n = 0;
  int w = 0;
  Scalar F = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar v_diff = 0;
  std::vector<std::pair<int, Scalar>> inner_diffs;
  Scalar gamma_n = 0;  // running sum over the cycle; the full value at w = wbar
  Scalar growth_monitor = 0;
  Scalar cert_max_residual = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar gap = std::numeric_limits<Scalar>::quiet_NaN();
  bool approximate = false;
};

template <typename Scalar>
struct Certificate {
  enum class Kind { outer, inner, copy };
  int index;
  Kind kind;
  Vector<Scalar> point;
  Scalar residual;  // ||point - (x0 - v^{n,wbar})||
  Scalar fenchel;   // h_i(point) + h_i^*(z_i) - <point, z_i>
};

template <typename Scalar>
struct RunDiagnostics {
  Scalar initial_F = 0;
  long checked_sweeps = 0;
  /// min of F(z^{n,w}) - F(z^{n,w-1}) over exact sweeps.
  Scalar min_ascent = infinity<Scalar>();
  /// min of the ascent minus 1/2(||dv||^2 + sum_j ||dz_j||^2) over exact sweeps.
  Scalar min_ascent_margin = infinity<Scalar>();
  /// Same two quantities for each individual subproblem (check level full).
  Scalar min_step_margin = infinity<Scalar>();
  /// Sum over all sweeps of 1/2(||dv||^2 + sum_j ||dz_j||^2).
  Scalar half_square_sum = 0;
  long certificates = 0;
  Scalar max_cert_fenchel = 0;
  Scalar max_cert_excess = -infinity<Scalar>();  // residual - gamma_n
  Scalar max_claim_residual = 0;
  Scalar max_block_sum_drift = 0;
  long freeze_violations = 0;
  Scalar max_replay_diff = 0;
  Scalar max_growth = 0;
  long approximate_solves = 0;

  bool ascent_ok() const {
    return checked_sweeps == 0 ||
           (min_ascent >= -Scalar(kAscentTol) && min_ascent_margin >= -Scalar(kAscentMarginTol));
  }
  bool certificates_ok() const {
    return certificates == 0 ||
           (max_cert_fenchel <= Scalar(kCertFenchelTol) && max_cert_excess <= Scalar(kCertBoundTol));
  }
  bool invariants_hold() const {
    return ascent_ok() && certificates_ok() && freeze_violations == 0 && max_claim_residual <= Scalar(kClaimTol) &&
           max_block_sum_drift <= Scalar(kBlockSumTol) && min_step_margin >= -Scalar(kAscentMarginTol);
  }
};

enum class RunStatus { converged, iteration_limit, non_finite };

template <typename Scalar>
struct RunResult {
  DualState<Scalar> state;
  Vector<Scalar> x;
  Scalar F = 0;
  Scalar gap = 0;
  Scalar gap_lower_bound = 0;
  int cycles = 0;
  RunStatus status = RunStatus::iteration_limit;
  std::vector<TraceRow<Scalar>> trace;
  RunDiagnostics<Scalar> diagnostics;
  std::vector<std::string> warnings;
  /// z^{n,0} for n = 1..cycles+1 (when requested).
  std::vector<std::vector<Vector<Scalar>>> cycle_duals;
  std::vector<Certificate<Scalar>> last_certificates;
};

namespace detail {

inline bool in_set(const IndexSet& s, int i) { return std::binary_search(s.begin(), s.end(), i); }

template <typename Scalar>
Vector<Scalar> sum_outside(const DualState<Scalar>& state, const IndexSet& excluded) {
  Vector<Scalar> c = Vector<Scalar>::Zero(state.z.front().size());
  for (int i = 1; i <= state.size(); ++i)
    if (!in_set(excluded, i)) c += state.at(i);
  return c;
}

}  // namespace detail

/// Cyclic coordinate minimization of the outer problem over S, each step in
/// closed form. Used when S holds two or more user terms.
template <typename Scalar>
BlockUpdate<Scalar> solve_outer_nested(const ProblemSpec<Scalar>& spec, const DualState<Scalar>& state,
                                       const IndexSet& S, const SolveParams& params = {}) {
  BlockUpdate<Scalar> out;
  out.approximate = true;
  if (S.empty()) return out;
  const Vector<Scalar> c = detail::sum_outside(state, S);
  std::vector<Vector<Scalar>> local;
  for (int i : S) local.push_back(state.at(i));
  for (int sweep = 0; sweep < params.nested_bcm_sweeps; ++sweep) {
    Scalar change(0);
    for (std::size_t k = 0; k < S.size(); ++k) {
      Vector<Scalar> rest = c;
      for (std::size_t l = 0; l < S.size(); ++l)
        if (l != k) rest += local[l];
      Vector<Scalar> next = spec.is_copy(S[k]) ? Vector<Scalar>(-rest / Scalar(2))
                                               : moreau_dual(spec.term(S[k]), Vector<Scalar>(spec.x0() - rest));
      change = std::max(change, (next - local[k]).norm());
      local[k] = std::move(next);
    }
    if (change < Scalar(params.nested_tol)) break;
  }
  for (std::size_t k = 0; k < S.size(); ++k) out.values.emplace_back(S[k], std::move(local[k]));
  return out;
}

/// Minimizes sum_{i in S} h_i^*(z_i) + 1/2 ||x0 - sum_{i in S} z_i - c||^2
/// over {z_i}_{i in S}, with c the sum of the duals outside S.
template <typename Scalar>
BlockUpdate<Scalar> solve_outer(const ProblemSpec<Scalar>& spec, const DualState<Scalar>& state, const IndexSet& S,
                                const SolveParams& params = {}) {
  check_state(spec, state);
  BlockUpdate<Scalar> out;
  if (S.empty()) return out;
  IndexSet users, copies;
  for (int i : S) {
    if (i < 1 || i > spec.size()) throw ScheduleError("outer index " + std::to_string(i) + " out of range");
    (spec.is_copy(i) ? copies : users).push_back(i);
  }
  if (users.size() > 1) return solve_outer_nested(spec, state, S, params);

  const Vector<Scalar> c = detail::sum_outside(state, S);
  const Scalar tau = Scalar(copies.size() + 1);
  if (users.empty()) {
    const Vector<Scalar> zj = -c / tau;
    for (int j : copies) out.values.emplace_back(j, zj);
    return out;
  }
  // With the copies eliminated the user dual solves
  //   min h^*(z) + 1/(2 tau) ||z - (tau x0 - c)||^2.
  const int i = users.front();
  const Vector<Scalar> u = tau * spec.x0() - c;
  Vector<Scalar> zi = scaled_moreau_dual(spec.term(i), u, tau);
  const Vector<Scalar> zj = -(c + zi) / tau;
  out.values.emplace_back(i, std::move(zi));
  for (int j : copies) out.values.emplace_back(j, zj);
  std::sort(out.values.begin(), out.values.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

/// Minimizes sum_{i in block} h_i^*(z_i) with the block sum held fixed. The
/// copy dual z_j is eliminated and recovered as the residual of the sum.
template <typename Scalar>
BlockUpdate<Scalar> solve_inner_block(const ProblemSpec<Scalar>& spec, const DualState<Scalar>& state, int j,
                                      const IndexSet& block, const SolveParams& params = {}) {
  check_state(spec, state);
  BlockUpdate<Scalar> out;
  if (block.empty()) return out;
  if (!spec.is_copy(j) || j > spec.size() || !detail::in_set(block, j))
    throw ScheduleError("inner block must contain its governing copy index " + std::to_string(j));
  IndexSet users;
  for (int i : block)
    if (i != j) users.push_back(i);
  if (users.empty()) return out;

  Vector<Scalar> block_sum = Vector<Scalar>::Zero(spec.dim());
  for (int i : block) block_sum += state.at(i);
  const Vector<Scalar> shifted = block_sum + spec.x0();

  std::vector<Vector<Scalar>> local;
  if (users.size() == 1) {
    local.push_back(moreau_dual(spec.term(users.front()), shifted));
  } else {
    out.approximate = true;
    for (int i : users) local.push_back(state.at(i));
    for (int sweep = 0; sweep < params.nested_bcm_sweeps; ++sweep) {
      Scalar change(0);
      for (std::size_t k = 0; k < users.size(); ++k) {
        Vector<Scalar> rest = Vector<Scalar>::Zero(spec.dim());
        for (std::size_t l = 0; l < users.size(); ++l)
          if (l != k) rest += local[l];
        Vector<Scalar> next = moreau_dual(spec.term(users[k]), Vector<Scalar>(shifted - rest));
        change = std::max(change, (next - local[k]).norm());
        local[k] = std::move(next);
      }
      if (change < Scalar(params.nested_tol)) break;
    }
  }
  Vector<Scalar> zj = block_sum;
  for (const auto& zi : local) zj -= zi;
  for (std::size_t k = 0; k < users.size(); ++k) out.values.emplace_back(users[k], std::move(local[k]));
  out.values.emplace_back(j, std::move(zj));
  std::sort(out.values.begin(), out.values.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

template <typename Scalar>
struct SweepResult {
  DualState<Scalar> state;
  Scalar v_diff = 0;
  std::vector<std::pair<int, Scalar>> inner_diffs;
  bool approximate = false;
  Scalar max_block_sum_drift = 0;
};

/// One sweep: the outer set and every inner block solved against the same
/// snapshot, then merged in index order. Untouched duals are copied forward.
template <typename Scalar>
SweepResult<Scalar> run_sweep(const ProblemSpec<Scalar>& spec, const DualState<Scalar>& state, const SweepPlan& plan,
                              const SolveParams& params = {}, TaskPool* pool = nullptr) {
  check_state(spec, state);
  std::vector<std::pair<int, const IndexSet*>> blocks;  // j = 0 marks the outer set
  if (!plan.outer.empty()) blocks.emplace_back(0, &plan.outer);
  for (const auto& [j, block] : plan.inner)
    if (!block.empty()) blocks.emplace_back(j, &block);

  std::vector<BlockUpdate<Scalar>> updates(blocks.size());
  std::vector<std::exception_ptr> errors(blocks.size());
  auto task = [&](std::size_t k) {
    try {
      const auto& [j, set] = blocks[k];
      updates[k] = j == 0 ? solve_outer(spec, state, *set, params) : solve_inner_block(spec, state, j, *set, params);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  if (pool) {
    pool->run(blocks.size(), task);
  } else {
    for (std::size_t k = 0; k < blocks.size(); ++k) task(k);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  SweepResult<Scalar> out;
  out.state = state;
  for (const auto& up : updates) {
    out.approximate = out.approximate || up.approximate;
    for (const auto& [i, value] : up.values) out.state.at(i) = value;
  }
  out.v_diff = (out.state.total() - state.total()).norm();
  for (const auto& [j, set] : blocks) {
    if (j == 0) continue;
    out.inner_diffs.emplace_back(j, (out.state.at(j) - state.at(j)).norm());
    Vector<Scalar> drift = Vector<Scalar>::Zero(spec.dim());
    for (int i : *set) drift += out.state.at(i) - state.at(i);
    out.max_block_sum_drift = std::max(out.max_block_sum_drift, drift.norm());
  }
  return out;
}

/// Sequential replay of a sweep with blocks applied in place one after the
/// other (inner blocks first, outer last). Returns the largest deviation from
/// the concurrent result and, through step_margin, the smallest per-step
/// ascent margin F(after) - F(before) - 1/2||d||^2 in the order outer, then
/// blocks by j.
template <typename Scalar>
Scalar replay_sweep(const ProblemSpec<Scalar>& spec, const DualState<Scalar>& before, const SweepResult<Scalar>& merged,
                    const SweepPlan& plan, const SolveParams& params, Scalar& step_margin) {
  DualState<Scalar> work = before;
  for (const auto& [j, block] : plan.inner)
    for (const auto& [i, value] : solve_inner_block(spec, work, j, block, params).values) work.at(i) = value;
  for (const auto& [i, value] : solve_outer(spec, work, plan.outer, params).values) work.at(i) = value;
  Scalar diff(0);
  for (int i = 1; i <= spec.size(); ++i) {
    const Scalar scale = std::max(Scalar(1), merged.state.at(i).norm());
    diff = std::max(diff, (work.at(i) - merged.state.at(i)).norm() / scale);
  }

  step_margin = infinity<Scalar>();
  DualState<Scalar> chain = before;
  Scalar f_prev = dual_objective(spec, chain);
  auto step = [&](const BlockUpdate<Scalar>& up, const Vector<Scalar>& moved) {
    for (const auto& [i, value] : up.values) chain.at(i) = value;
    const Scalar f = dual_objective(spec, chain);
    if (!up.approximate && is_finite(f_prev) && is_finite(f))
      step_margin = std::min(step_margin, f - f_prev - Scalar(0.5) * moved.squaredNorm());
    f_prev = f;
  };
  if (!plan.outer.empty()) {
    const BlockUpdate<Scalar> up = solve_outer(spec, chain, plan.outer, params);
    Vector<Scalar> moved = Vector<Scalar>::Zero(spec.dim());
    for (const auto& [i, value] : up.values) moved += value - chain.at(i);
    step(up, moved);
  }
  for (const auto& [j, block] : plan.inner) {
    if (block.empty()) continue;
    const BlockUpdate<Scalar> up = solve_inner_block(spec, chain, j, block, params);
    Vector<Scalar> moved = Vector<Scalar>::Zero(spec.dim());
    for (const auto& [i, value] : up.values)
      if (i == j) moved = value - chain.at(i);
    step(up, moved);
  }
  return diff;
}

/// Certificate points x_i^n for one executed cycle. snapshots[w] holds
/// z^{n,w} for w = 0..wbar. Indices whose construction needs a q(n,i) that the
/// analysis could not supply are skipped.
template <typename Scalar>
std::vector<Certificate<Scalar>> certificate_points(const ProblemSpec<Scalar>& spec,
                                                    const std::vector<DualState<Scalar>>& snapshots,
                                                    const std::vector<SweepPlan>& sweeps,
                                                    const CycleAnalysis& analysis) {
  if (snapshots.size() != sweeps.size() + 1)
    throw Error("certificates need one snapshot per sweep plus the cycle start");
  const std::size_t wbar = sweeps.size();
  const DualState<Scalar>& last = snapshots[wbar];
  const Vector<Scalar> x_final = primal_estimate(spec, last);
  std::vector<Certificate<Scalar>> out;
  for (int i = 1; i <= spec.size(); ++i) {
    const auto pit = analysis.p.find(i);
    if (pit == analysis.p.end()) continue;
    const std::size_t p = static_cast<std::size_t>(pit->second);
    Certificate<Scalar> cert{i, Certificate<Scalar>::Kind::outer, {}, 0, 0};
    if (!analysis.via_inner(i)) {
      cert.point = primal_estimate(spec, snapshots[p]);
    } else {
      const auto qit = analysis.q.find(i);
      if (qit == analysis.q.end()) continue;
      const std::size_t q = static_cast<std::size_t>(qit->second);
      const int j = analysis.governing.at(i);
      if (i == j) {
        cert.kind = Certificate<Scalar>::Kind::copy;
        cert.point = spec.x0() + snapshots[p].at(i);
      } else {
        cert.kind = Certificate<Scalar>::Kind::inner;
        const IndexSet& block = sweeps[p - 1].inner.at(j);
        cert.point = spec.x0();
        for (int k = 1; k <= spec.size(); ++k) {
          const bool member = k != j && detail::in_set(block, k);
          cert.point -= member ? snapshots[p].at(k) : snapshots[q].at(k);
        }
      }
    }
    cert.residual = (cert.point - x_final).norm();
    cert.fenchel = fenchel_residual(spec, i, last.at(i), cert.point);
    out.push_back(std::move(cert));
  }
  return out;
}

/// Counts duals that moved after their last scheduled touch, or block members
/// that moved between the governing outer solve and the block solve.
template <typename Scalar>
long count_freeze_violations(const std::vector<DualState<Scalar>>& snapshots, const std::vector<SweepPlan>& sweeps,
                             const CycleAnalysis& analysis) {
  long bad = 0;
  const std::size_t wbar = sweeps.size();
  for (const auto& [i, p] : analysis.p)
    for (std::size_t w = static_cast<std::size_t>(p); w <= wbar; ++w)
      if (snapshots[w].at(i) != snapshots[static_cast<std::size_t>(p)].at(i)) ++bad;
  for (const auto& [i, q] : analysis.q) {
    const int p = analysis.p.at(i);
    const IndexSet& block = sweeps[static_cast<std::size_t>(p - 1)].inner.at(analysis.governing.at(i));
    for (int k : block)
      for (int w = q; w < p; ++w)
        if (snapshots[static_cast<std::size_t>(w)].at(k) != snapshots[static_cast<std::size_t>(q)].at(k)) ++bad;
  }
  return bad;
}

/// Runs cycles of the plan until the duality gap at x = x0 - v falls to
/// params.stop_gap or params.max_iterations cycles have run.
template <typename Scalar>
RunResult<Scalar> run(const ProblemSpec<Scalar>& spec, const CyclePlan& plan, const SolveParams& params = {},
                      std::optional<std::type_identity_t<DualState<Scalar>>> z_init = std::nullopt) {
  const ScheduleAnalysis analysis = validate(plan, spec.r(), spec.m());
  RunResult<Scalar> result;
  if (!analysis.valid()) {
    std::ostringstream msg;
    msg << "schedule violates the validity conditions:";
    for (const Violation& v : analysis.violations) msg << "\n  " << v.message;
    if (!params.allow_invalid_schedule) throw ScheduleError(msg.str());
    result.warnings.push_back(msg.str());
  }
  if (!analysis.sqrt_growth_ok)
    result.warnings.push_back("schedule does not meet the single-index sufficient condition for O(sqrt(n)) dual growth");
  if (params.max_iterations < 1) throw Error("max_iterations must be positive");
  if (params.workers < 1) throw Error("workers must be positive");
  if (params.nested_bcm_sweeps < 1) throw Error("nested_bcm_sweeps must be positive");

  DualState<Scalar> state = z_init ? std::move(*z_init) : DualState<Scalar>::zeros(spec);
  check_state(spec, state);
  state.n = 1;
  state.w = 0;

  std::optional<TaskPool> pool;
  if (params.workers > 1) pool.emplace(static_cast<std::size_t>(params.workers));
  TaskPool* pool_ptr = pool ? &*pool : nullptr;

  RunDiagnostics<Scalar>& diag = result.diagnostics;
  diag.initial_F = dual_objective(spec, state);
  const bool keep_snapshots = params.check_level != CheckLevel::off;
  const bool track_sweeps = keep_snapshots || params.per_sweep_trace;
  const int wbar = plan.sweeps_per_cycle();
  Scalar f_prev = diag.initial_F;
  Scalar best_f = -infinity<Scalar>();
  Scalar f_cycle = diag.initial_F;

  for (int n = 1; n <= params.max_iterations; ++n) {
    const std::vector<SweepPlan>& sweeps = plan.cycle(n);
    const CycleAnalysis& cycle_analysis = analysis.for_cycle(n);
    if (params.record_cycle_duals) result.cycle_duals.push_back(state.z);

    std::vector<DualState<Scalar>> snapshots;
    if (keep_snapshots) snapshots.push_back(state);
    std::vector<TraceRow<Scalar>> rows;
    Scalar gamma(0);
    bool cycle_approx = false;
    const Scalar root_n = std::sqrt(Scalar(n));

    for (int w = 1; w <= wbar; ++w) {
      const SweepPlan& sweep = sweeps[static_cast<std::size_t>(w - 1)];
      SweepResult<Scalar> res = run_sweep(spec, state, sweep, params, pool_ptr);
      cycle_approx = cycle_approx || res.approximate;
      if (res.approximate) ++diag.approximate_solves;
      diag.max_block_sum_drift = std::max(diag.max_block_sum_drift, res.max_block_sum_drift);

      if (params.check_level == CheckLevel::full) {
        Scalar margin;
        diag.max_replay_diff = std::max(diag.max_replay_diff, replay_sweep(spec, state, res, sweep, params, margin));
        diag.min_step_margin = std::min(diag.min_step_margin, margin);
      }

      Scalar squares = res.v_diff * res.v_diff;
      gamma += res.v_diff;
      for (const auto& [j, d] : res.inner_diffs) {
        squares += d * d;
        gamma += d;
      }
      diag.half_square_sum += Scalar(0.5) * squares;

      Scalar f_new = std::numeric_limits<Scalar>::quiet_NaN();
      if (track_sweeps || w == wbar) f_new = dual_objective(spec, res.state);
      if (track_sweeps) {
        if (!res.approximate && is_finite(f_prev) && is_finite(f_new)) {
          ++diag.checked_sweeps;
          diag.min_ascent = std::min(diag.min_ascent, f_new - f_prev);
          diag.min_ascent_margin = std::min(diag.min_ascent_margin, f_new - f_prev - Scalar(0.5) * squares);
        }
        f_prev = f_new;
      }

      if (keep_snapshots && !res.approximate && !sweep.outer.empty()) {
        const Vector<Scalar> x = primal_estimate(spec, res.state);
        for (int i : sweep.outer)
          diag.max_claim_residual = std::max(diag.max_claim_residual, fenchel_residual(spec, res.state, i, x));
      }

      state = std::move(res.state);
      state.w = w;
      TraceRow<Scalar> row;
      row.n = n;
      row.w = w;
      row.F = f_new;
      row.v_diff = res.v_diff;
      row.inner_diffs = std::move(res.inner_diffs);
      row.gamma_n = gamma;
      row.growth_monitor = state.norm() / root_n;
      row.approximate = res.approximate;
      rows.push_back(std::move(row));
      if (keep_snapshots) snapshots.push_back(state);

      if (!state.all_finite() || (w == wbar && std::isnan(f_new))) {
        result.status = RunStatus::non_finite;
        result.trace.push_back(rows.back());
        result.cycles = n;
        result.state = state;
        result.x = primal_estimate(spec, state);
        result.F = f_new;
        result.gap = std::numeric_limits<Scalar>::quiet_NaN();
        return result;
      }
    }

    f_cycle = rows.back().F;
    if (!track_sweeps) {
      if (is_finite(f_prev) && is_finite(f_cycle)) {
        ++diag.checked_sweeps;
        diag.min_ascent = std::min(diag.min_ascent, f_cycle - f_prev);
      }
      f_prev = f_cycle;
    }
    diag.max_growth = std::max(diag.max_growth, rows.back().growth_monitor);

    if (keep_snapshots && !cycle_approx && cycle_analysis.valid()) {
      result.last_certificates = certificate_points(spec, snapshots, sweeps, cycle_analysis);
      Scalar worst(0);
      for (const auto& c : result.last_certificates) {
        ++diag.certificates;
        worst = std::max(worst, c.residual);
        diag.max_cert_fenchel = std::max(diag.max_cert_fenchel, c.fenchel);
        diag.max_cert_excess = std::max(diag.max_cert_excess, c.residual - gamma);
      }
      rows.back().cert_max_residual = worst;
      diag.freeze_violations += count_freeze_violations(snapshots, sweeps, cycle_analysis);
    }

    const Vector<Scalar> x = primal_estimate(spec, state);
    best_f = std::max(best_f, f_cycle);
    const Scalar gap = primal_objective(spec, x) - best_f;
    rows.back().gap = gap;
    if (params.per_sweep_trace) {
      for (auto& row : rows) result.trace.push_back(std::move(row));
    } else {
      rows.back().approximate = cycle_approx;
      result.trace.push_back(std::move(rows.back()));
    }

    result.cycles = n;
    state.n = n + 1;
    state.w = 0;
    result.gap = gap;
    if (params.stop_gap > 0 && is_finite(gap) && gap <= Scalar(params.stop_gap)) {
      result.status = RunStatus::converged;
      break;
    }
  }

  if (params.record_cycle_duals) result.cycle_duals.push_back(state.z);
  result.x = primal_estimate(spec, state);
  result.F = f_cycle;
  result.gap_lower_bound = gap_report(spec, state, result.x).gap_lower_bound;
  result.state = std::move(state);
  return result;
}

/// Dykstra's algorithm on the product-space reformulation, written out
/// directly in primal-dual form. Returns z^1..z^iterations (z^1 is z_init).
template <typename Scalar>
std::vector<std::vector<Vector<Scalar>>> literal_product_space(const ProblemSpec<Scalar>& spec,
                                                               std::vector<Vector<Scalar>> z, int iterations) {
  const int r = spec.r();
  if (static_cast<int>(z.size()) != r) throw DimensionError("need one dual vector per set");
  for (const auto& t : spec.terms())
    if (!t.is_indicator()) throw Error("product-space reference needs set indicators");
  auto average_x = [&](const std::vector<Vector<Scalar>>& duals) {
    Vector<Scalar> s = Vector<Scalar>::Zero(spec.dim());
    for (const auto& zi : duals) s += zi;
    return Vector<Scalar>(spec.x0() - s / Scalar(r));
  };
  std::vector<std::vector<Vector<Scalar>>> history{z};
  Vector<Scalar> x = average_x(z);
  for (int n = 2; n <= iterations; ++n) {
    Vector<Scalar> x_sum = Vector<Scalar>::Zero(spec.dim());
    for (int i = 0; i < r; ++i) {
      const Vector<Scalar> u = x + z[static_cast<std::size_t>(i)];
      const Vector<Scalar> xi = project(spec.terms()[static_cast<std::size_t>(i)].set(), u);
      z[static_cast<std::size_t>(i)] = u - xi;
      x_sum += xi;
    }
    x = x_sum / Scalar(r);
    history.push_back(z);
  }
  return history;
}

}  // namespace dyksplit
