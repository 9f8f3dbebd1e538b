#pragma once

// JSON run configuration and trace output.
//
// {
//   "problem":   {"dim": 2, "x0": [1, 1],
//                 "terms": [{"type": "halfspace", "a": [1, 0], "b": 0}, ...],
//                 "random": {"kind": "halfspaces", "r": 3, "dim": 4, "seed": 7}},
//   "splitting": {"m": 1, "schedule": {"mode": "custom",
//                 "cycles": {"pattern": [{"outer": [3], "inner": [{"j": 3, "indices": [1, 3]}]}],
//                            "prefix": []}}},
//   "solve":     {"max_iterations": 1000, "stop_gap": 1e-12, "nested_bcm_sweeps": 200,
//                 "nested_tol": 1e-14, "workers": 1, "check_level": "sweep",
//                 "z_init": "zeros", "z_values": [[...], ...]},
//   "output":    {"trace_path": "trace.csv", "format": "csv", "per_sweep": false}
// }
//
// Term types: halfspace {a, b} (a.x <= b), hyperplane {a, b}, box {lo, hi},
// ball {center, radius}, affine {A, c} (Ax = c), l1 {weight},
// quadratic {center, weight}. When "random" is present it replaces the
// listed terms and x0.

#include "dyksplit/engine.hpp"
#include "dyksplit/fixtures.hpp"
#include "dyksplit/schedule.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace dyksplit {

struct TermConfig {
  std::string type;
  std::vector<double> a;
  double b = 0;
  std::vector<double> lo, hi;
  std::vector<double> center;
  double radius = 0;
  std::vector<std::vector<double>> A;
  std::vector<double> c;
  double weight = 1;

  friend bool operator==(const TermConfig&, const TermConfig&) = default;
};

struct RandomProblemConfig {
  std::string kind = "halfspaces";
  int r = 3;
  int dim = 2;
  std::uint64_t seed = 0;

  friend bool operator==(const RandomProblemConfig&, const RandomProblemConfig&) = default;
};

struct ProblemConfig {
  int dim = 0;
  std::vector<double> x0;
  std::vector<TermConfig> terms;
  std::optional<RandomProblemConfig> random;

  friend bool operator==(const ProblemConfig&, const ProblemConfig&) = default;
};

struct ScheduleConfig {
  std::string mode = "classic";  // classic | product | custom | literal_product
  std::optional<CyclePlan> cycles;

  friend bool operator==(const ScheduleConfig&, const ScheduleConfig&) = default;
};

struct SplittingConfig {
  int m = 0;
  ScheduleConfig schedule;

  friend bool operator==(const SplittingConfig&, const SplittingConfig&) = default;
};

struct SolveConfig {
  int max_iterations = 1000;
  double stop_gap = 1e-12;
  int nested_bcm_sweeps = 200;
  double nested_tol = 1e-14;
  int workers = 1;
  std::string check_level = "sweep";
  std::string z_init = "zeros";  // zeros | explicit
  std::vector<std::vector<double>> z_values;

  friend bool operator==(const SolveConfig&, const SolveConfig&) = default;
};

struct OutputConfig {
  std::string trace_path;
  std::string format = "csv";
  bool per_sweep = false;

  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct RunConfig {
  ProblemConfig problem;
  SplittingConfig splitting;
  SolveConfig solve;
  OutputConfig output;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Throws Error with the offending key on schema violations.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& config);

nlohmann::json plan_to_json(const CyclePlan& plan);
CyclePlan plan_from_json(const nlohmann::json& doc);

/// The problem with the split count the schedule mode implies: classic
/// forces m = 0, product (and literal_product) forces m = r - 1.
ProblemSpec<double> build_problem(const RunConfig& config);
CyclePlan build_plan(const RunConfig& config, const ProblemSpec<double>& spec);
SolveParams build_params(const RunConfig& config);
std::optional<DualState<double>> build_initial_state(const RunConfig& config, const ProblemSpec<double>& spec);

CheckLevel parse_check_level(const std::string& name);

inline constexpr const char* kTraceHeader = "n,w,F,v_diff,gamma_n,growth_monitor,cert_max_residual,approx_flag";

/// %.17g, with inf, -inf and nan spelled out.
std::string format_number(double value);

void write_trace_csv(std::ostream& os, const std::vector<TraceRow<double>>& rows,
                     const std::vector<std::string>& notes = {});
void write_trace_json(std::ostream& os, const std::vector<TraceRow<double>>& rows,
                      const std::vector<std::string>& notes = {});
/// Writes to config.output.trace_path in the configured format; no-op when the path is empty.
void write_trace(const RunConfig& config, const std::vector<TraceRow<double>>& rows,
                 const std::vector<std::string>& notes = {});

}  // namespace dyksplit
