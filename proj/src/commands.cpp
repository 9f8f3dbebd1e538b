#include "dyksplit/cli.hpp"

#include "dyksplit/config.hpp"
#include "dyksplit/oracle.hpp"

#include <iostream>
#include <sstream>

namespace dyksplit {

namespace {

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

Streams streams(const CliOptions& o) { return {o.out ? *o.out : std::cout, o.err ? *o.err : std::cerr}; }

std::string format_vector(const VectorXd& v) {
  std::string s = "[";
  for (Eigen::Index k = 0; k < v.size(); ++k) s += (k ? ", " : "") + format_number(v[k]);
  return s + "]";
}

RunConfig load_with_overrides(const std::string& path, const CliOptions& opts) {
  RunConfig cfg = load_config(path);
  if (opts.workers) {
    if (*opts.workers < 1) throw Error("--workers must be positive");
    cfg.solve.workers = *opts.workers;
  }
  if (opts.seed && cfg.problem.random) cfg.problem.random->seed = *opts.seed;
  return cfg;
}

/// Validates the plan, deferring invalid inner blocks when allowed. Throws
/// ScheduleError when the plan stays invalid.
CyclePlan checked_plan(CyclePlan plan, const ProblemSpec<double>& spec, bool auto_defer, std::ostream& err,
                       std::vector<std::string>& notes) {
  const ScheduleAnalysis analysis = validate(plan, spec.r(), spec.m());
  if (analysis.valid()) return plan;
  for (const Violation& v : analysis.violations) err << "violation (" << v.condition << "): " << v.message << '\n';
  if (!auto_defer) throw ScheduleError("schedule is invalid; rerun with --auto-defer to move offending inner blocks");
  CyclePlan rewritten = rewrite_deferred(plan, spec.r(), spec.m());
  std::ostringstream msg;
  msg << "schedule rewritten: inner blocks violating condition B deferred to the start of the next cycle ("
      << plan.sweeps_per_cycle() << " -> " << rewritten.sweeps_per_cycle() << " sweeps per cycle)";
  notes.push_back(msg.str());
  err << msg.str() << '\n' << describe(rewritten);
  return rewritten;
}

const char* status_name(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::iteration_limit: return "iteration limit";
    case RunStatus::non_finite: return "non-finite values";
  }
  return "";
}

struct Trajectory {
  std::vector<std::vector<VectorXd>> duals;  // user duals at the start of each cycle
  VectorXd x;
  std::string trace_csv;
};

Trajectory trajectory(const RunConfig& cfg, const CliOptions& opts, std::ostream& err) {
  const ProblemSpec<double> spec = build_problem(cfg);
  const std::optional<DualState<double>> init = build_initial_state(cfg, spec);
  Trajectory t;
  if (cfg.splitting.schedule.mode == "literal_product") {
    std::vector<VectorXd> z(static_cast<std::size_t>(spec.r()), VectorXd::Zero(spec.dim()));
    if (init)
      for (int i = 1; i <= spec.r(); ++i) z[static_cast<std::size_t>(i - 1)] = init->at(i);
    t.duals = literal_product_space(spec, z, cfg.solve.max_iterations + 1);
    VectorXd sum = VectorXd::Zero(spec.dim());
    for (const auto& zi : t.duals.back()) sum += zi;
    t.x = spec.x0() - sum / double(spec.r());
    return t;
  }
  std::vector<std::string> notes;
  const CyclePlan plan = checked_plan(build_plan(cfg, spec), spec, opts.auto_defer, err, notes);
  SolveParams params = build_params(cfg);
  params.record_cycle_duals = true;
  RunResult<double> res = run(spec, plan, params, init);
  for (auto& cycle : res.cycle_duals) {
    cycle.resize(static_cast<std::size_t>(spec.r()));
    t.duals.push_back(std::move(cycle));
  }
  t.x = res.x;
  std::ostringstream csv;
  write_trace_csv(csv, res.trace);
  t.trace_csv = csv.str();
  return t;
}

}  // namespace

int cmd_solve(const std::string& config_path, const CliOptions& opts) {
  auto [out, err] = streams(opts);
  try {
    const RunConfig cfg = load_with_overrides(config_path, opts);
    if (cfg.splitting.schedule.mode == "literal_product")
      throw Error("literal_product mode is a reference trajectory for compare, not a solver schedule");
    const ProblemSpec<double> spec = build_problem(cfg);
    std::vector<std::string> notes;
    const CyclePlan plan = checked_plan(build_plan(cfg, spec), spec, opts.auto_defer, err, notes);
    const RunResult<double> res = run(spec, plan, build_params(cfg), build_initial_state(cfg, spec));
    for (const auto& w : res.warnings) err << "warning: " << w << '\n';
    write_trace(cfg, res.trace, notes);

    const RunDiagnostics<double>& d = res.diagnostics;
    out << "status: " << status_name(res.status) << '\n'
        << "cycles: " << res.cycles << '\n'
        << "x: " << format_vector(res.x) << '\n'
        << "F: " << format_number(res.F) << '\n'
        << "gap: " << format_number(res.gap) << '\n'
        << "gap_lower_bound: " << format_number(res.gap_lower_bound) << '\n'
        << "max_growth_monitor: " << format_number(d.max_growth) << '\n'
        << "approximate_solves: " << d.approximate_solves << '\n';
    if (cfg.solve.check_level != "off") {
      out << "runtime_checks: " << (d.invariants_hold() ? "ok" : "VIOLATED") << '\n';
      if (!d.invariants_hold())
        err << "runtime checks failed: min ascent " << format_number(d.min_ascent) << ", ascent margin "
            << format_number(d.min_ascent_margin) << ", certificate excess " << format_number(d.max_cert_excess)
            << ", freeze violations " << d.freeze_violations << '\n';
    }
    if (res.status == RunStatus::non_finite) {
      err << "error: non-finite values in cycle " << res.cycles << '\n';
      return kExitConfig;
    }
    return res.status == RunStatus::converged ? kExitOk : kExitIterationCap;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

int cmd_validate(const std::string& config_path, const CliOptions& opts) {
  auto [out, err] = streams(opts);
  try {
    const RunConfig cfg = load_with_overrides(config_path, opts);
    const ProblemSpec<double> spec = build_problem(cfg);
    CyclePlan plan = build_plan(cfg, spec);
    out << "r = " << spec.r() << ", m = " << spec.m() << '\n' << describe(plan);
    ScheduleAnalysis analysis = validate(plan, spec.r(), spec.m());
    out << describe(analysis);
    if (!analysis.valid() && opts.auto_defer) {
      plan = rewrite_deferred(plan, spec.r(), spec.m());
      analysis = validate(plan, spec.r(), spec.m());
      out << "rewritten:\n" << describe(plan) << describe(analysis);
    }
    return analysis.valid() ? kExitOk : kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

int cmd_compare(const std::string& config_a, const std::string& config_b, const CliOptions& opts) {
  auto [out, err] = streams(opts);
  try {
    const RunConfig a = load_with_overrides(config_a, opts);
    const RunConfig b = load_with_overrides(config_b, opts);
    if (!(a.problem == b.problem)) throw Error("the two configs describe different problems");
    const Trajectory ta = trajectory(a, opts, err);
    const Trajectory tb = trajectory(b, opts, err);

    const std::size_t common = std::min(ta.duals.size(), tb.duals.size());
    double max_dual = 0;
    for (std::size_t n = 0; n < common; ++n)
      for (std::size_t i = 0; i < ta.duals[n].size(); ++i)
        max_dual = std::max(max_dual, (ta.duals[n][i] - tb.duals[n][i]).norm());
    const double x_diff = (ta.x - tb.x).norm();
    out << "cycles_compared: " << common << '\n'
        << "max_dual_diff: " << format_number(max_dual) << '\n'
        << "final_x_diff: " << format_number(x_diff) << '\n'
        << "x_a: " << format_vector(ta.x) << '\n'
        << "x_b: " << format_vector(tb.x) << '\n';
    if (!ta.trace_csv.empty() && !tb.trace_csv.empty())
      out << "traces_identical: " << (ta.trace_csv == tb.trace_csv ? "yes" : "no") << '\n';
    if (opts.report) return kExitOk;
    const bool equivalent = max_dual <= 1e-9;
    out << "equivalent: " << (equivalent ? "yes" : "no") << '\n';
    return equivalent ? kExitOk : kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

int cmd_oracle(const std::string& config_path, const CliOptions& opts) {
  auto [out, err] = streams(opts);
  try {
    const RunConfig cfg = load_with_overrides(config_path, opts);
    const ProblemSpec<double> spec = build_problem(cfg);
    for (const auto& t : spec.terms())
      if (!t.is_indicator()) throw Error("the oracle handles set indicators only, found " + t.name());

    VectorXd x;
    const auto poly = to_polyhedral(spec);
    if (poly && poly->constraints.size() <= kMaxEnumeratedConstraints) {
      const auto projected = qp_project(*poly);
      if (!projected) {
        out << "infeasible: the intersection is empty\n";
        return kExitInfeasible;
      }
      x = *projected;
      out << "method: active-set enumeration\n";
    } else {
      const ReferenceResult<double> ref = reference_solve(spec, 1e-10);
      double violation = 0;
      for (const auto& t : spec.terms()) violation = std::max(violation, (project(t.set(), ref.x) - ref.x).norm());
      if (violation > 1e-6) {
        out << "infeasible: no common point after " << ref.cycles << " cycles (max set distance "
            << format_number(violation) << ")\n";
        return kExitInfeasible;
      }
      x = ref.x;
      out << "method: cyclic projections (" << ref.cycles << " cycles" << (ref.converged ? "" : ", not converged")
          << ")\n";
      if (!ref.converged) {
        out << "x*: " << format_vector(x) << '\n';
        return kExitIterationCap;
      }
    }
    const double alpha = 0.5 * (spec.x0() - x).squaredNorm();
    out << "x*: " << format_vector(x) << '\n'
        << "alpha: " << format_number(alpha) << '\n'
        << "alpha_split: " << format_number(primal_objective(spec, x)) << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace dyksplit
