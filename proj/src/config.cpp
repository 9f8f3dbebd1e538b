#include "dyksplit/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

namespace dyksplit {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw Error(where + " must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& item : obj.items())
    if (!keys.count(item.key())) throw Error("unknown key '" + item.key() + "' in " + where);
}

template <typename T>
T get_or(const json& obj, const char* key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(where + "." + key + " has the wrong type");
  }
}

template <typename T>
T require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw Error(where + " is missing '" + key + "'");
  return get_or<T>(obj, key, where, T{});
}

VectorXd to_vector(const std::vector<double>& values, Eigen::Index dim, const std::string& what) {
  if (static_cast<Eigen::Index>(values.size()) != dim)
    throw DimensionError(what + " has " + std::to_string(values.size()) + " entries, expected " + std::to_string(dim));
  return Eigen::Map<const VectorXd>(values.data(), dim);
}

TermConfig parse_term(const json& t, const std::string& where) {
  TermConfig out;
  out.type = require<std::string>(t, "type", where);
  if (out.type == "halfspace" || out.type == "hyperplane") {
    reject_unknown(t, where, {"type", "a", "b"});
    out.a = require<std::vector<double>>(t, "a", where);
    out.b = require<double>(t, "b", where);
  } else if (out.type == "box") {
    reject_unknown(t, where, {"type", "lo", "hi"});
    out.lo = require<std::vector<double>>(t, "lo", where);
    out.hi = require<std::vector<double>>(t, "hi", where);
  } else if (out.type == "ball") {
    reject_unknown(t, where, {"type", "center", "radius"});
    out.center = require<std::vector<double>>(t, "center", where);
    out.radius = require<double>(t, "radius", where);
  } else if (out.type == "affine") {
    reject_unknown(t, where, {"type", "A", "c"});
    out.A = require<std::vector<std::vector<double>>>(t, "A", where);
    out.c = require<std::vector<double>>(t, "c", where);
  } else if (out.type == "l1") {
    reject_unknown(t, where, {"type", "weight"});
    out.weight = get_or<double>(t, "weight", where, 1.0);
  } else if (out.type == "quadratic") {
    reject_unknown(t, where, {"type", "center", "weight"});
    out.center = require<std::vector<double>>(t, "center", where);
    out.weight = get_or<double>(t, "weight", where, 1.0);
  } else {
    throw Error(where + ": unknown term type '" + out.type + "'");
  }
  return out;
}

json term_to_json(const TermConfig& t) {
  json out = {{"type", t.type}};
  if (t.type == "halfspace" || t.type == "hyperplane") {
    out["a"] = t.a;
    out["b"] = t.b;
  } else if (t.type == "box") {
    out["lo"] = t.lo;
    out["hi"] = t.hi;
  } else if (t.type == "ball") {
    out["center"] = t.center;
    out["radius"] = t.radius;
  } else if (t.type == "affine") {
    out["A"] = t.A;
    out["c"] = t.c;
  } else if (t.type == "l1") {
    out["weight"] = t.weight;
  } else if (t.type == "quadratic") {
    out["center"] = t.center;
    out["weight"] = t.weight;
  }
  return out;
}

ConvexTerm<double> build_term(const TermConfig& t, Eigen::Index dim, const std::string& where) {
  using Set = SetDescriptor<double>;
  if (t.type == "halfspace") return ConvexTerm<double>::indicator(Set::halfspace(to_vector(t.a, dim, where + ".a"), t.b));
  if (t.type == "hyperplane")
    return ConvexTerm<double>::indicator(Set::hyperplane(to_vector(t.a, dim, where + ".a"), t.b));
  if (t.type == "box")
    return ConvexTerm<double>::indicator(Set::box(to_vector(t.lo, dim, where + ".lo"), to_vector(t.hi, dim, where + ".hi")));
  if (t.type == "ball")
    return ConvexTerm<double>::indicator(Set::ball(to_vector(t.center, dim, where + ".center"), t.radius));
  if (t.type == "affine") {
    MatrixXd A(static_cast<Eigen::Index>(t.A.size()), dim);
    for (std::size_t k = 0; k < t.A.size(); ++k)
      A.row(static_cast<Eigen::Index>(k)) = to_vector(t.A[k], dim, where + ".A row").transpose();
    return ConvexTerm<double>::indicator(Set::affine(A, to_vector(t.c, A.rows(), where + ".c")));
  }
  if (t.type == "l1") return ConvexTerm<double>::l1(t.weight, dim);
  if (t.type == "quadratic") return ConvexTerm<double>::quadratic(to_vector(t.center, dim, where + ".center"), t.weight);
  throw Error(where + ": unknown term type '" + t.type + "'");
}

IndexSet sorted_unique(std::vector<int> v, const std::string& where) {
  std::sort(v.begin(), v.end());
  if (std::adjacent_find(v.begin(), v.end()) != v.end()) throw Error(where + " lists an index twice");
  return v;
}

SweepPlan sweep_from_json(const json& s, const std::string& where) {
  reject_unknown(s, where, {"outer", "inner"});
  SweepPlan out;
  out.outer = sorted_unique(get_or<std::vector<int>>(s, "outer", where, {}), where + ".outer");
  if (s.contains("inner")) {
    if (!s.at("inner").is_array()) throw Error(where + ".inner must be an array");
    for (const auto& b : s.at("inner")) {
      const std::string bw = where + ".inner";
      reject_unknown(b, bw, {"j", "indices"});
      const int j = require<int>(b, "j", bw);
      if (out.inner.count(j)) throw Error(bw + " has two blocks for j=" + std::to_string(j));
      out.inner[j] = sorted_unique(require<std::vector<int>>(b, "indices", bw), bw + ".indices");
    }
  }
  return out;
}

json sweep_to_json(const SweepPlan& s) {
  json inner = json::array();
  for (const auto& [j, block] : s.inner) inner.push_back({{"j", j}, {"indices", block}});
  return {{"outer", s.outer}, {"inner", inner}};
}

std::vector<SweepPlan> sweeps_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw Error(where + " must be an array of sweeps");
  std::vector<SweepPlan> out;
  for (std::size_t w = 0; w < arr.size(); ++w) out.push_back(sweep_from_json(arr[w], where + "[" + std::to_string(w) + "]"));
  return out;
}

json sweeps_to_json(const std::vector<SweepPlan>& sweeps) {
  json arr = json::array();
  for (const auto& s : sweeps) arr.push_back(sweep_to_json(s));
  return arr;
}

bool product_mode(const std::string& mode) { return mode == "product" || mode == "literal_product"; }

}  // namespace

CyclePlan plan_from_json(const json& doc) {
  reject_unknown(doc, "schedule.cycles", {"pattern", "prefix"});
  CyclePlan plan;
  plan.pattern = sweeps_from_json(doc.at("pattern"), "schedule.cycles.pattern");
  if (doc.contains("prefix")) {
    const json& prefix = doc.at("prefix");
    if (!prefix.is_array()) throw Error("schedule.cycles.prefix must be an array of cycles");
    for (std::size_t k = 0; k < prefix.size(); ++k)
      plan.prefix.push_back(sweeps_from_json(prefix[k], "schedule.cycles.prefix[" + std::to_string(k) + "]"));
  }
  return plan;
}

json plan_to_json(const CyclePlan& plan) {
  json prefix = json::array();
  for (const auto& cycle : plan.prefix) prefix.push_back(sweeps_to_json(cycle));
  return {{"pattern", sweeps_to_json(plan.pattern)}, {"prefix", prefix}};
}

RunConfig parse_config(const json& doc) {
  reject_unknown(doc, "config", {"problem", "splitting", "solve", "output"});
  RunConfig cfg;
  if (!doc.contains("problem")) throw Error("config is missing 'problem'");

  const json& p = doc.at("problem");
  reject_unknown(p, "problem", {"dim", "x0", "terms", "random"});
  cfg.problem.dim = get_or<int>(p, "dim", "problem", 0);
  cfg.problem.x0 = get_or<std::vector<double>>(p, "x0", "problem", {});
  if (p.contains("terms")) {
    if (!p.at("terms").is_array()) throw Error("problem.terms must be an array");
    for (std::size_t k = 0; k < p.at("terms").size(); ++k)
      cfg.problem.terms.push_back(parse_term(p.at("terms")[k], "problem.terms[" + std::to_string(k) + "]"));
  }
  if (p.contains("random")) {
    const json& rnd = p.at("random");
    reject_unknown(rnd, "problem.random", {"kind", "r", "dim", "seed"});
    RandomProblemConfig rc;
    rc.kind = get_or<std::string>(rnd, "kind", "problem.random", rc.kind);
    rc.r = get_or<int>(rnd, "r", "problem.random", rc.r);
    rc.dim = get_or<int>(rnd, "dim", "problem.random", rc.dim);
    rc.seed = get_or<std::uint64_t>(rnd, "seed", "problem.random", rc.seed);
    parse_fixture_kind(rc.kind);
    cfg.problem.random = rc;
  }

  if (doc.contains("splitting")) {
    const json& s = doc.at("splitting");
    reject_unknown(s, "splitting", {"m", "schedule"});
    cfg.splitting.m = get_or<int>(s, "m", "splitting", 0);
    if (s.contains("schedule")) {
      const json& sc = s.at("schedule");
      reject_unknown(sc, "splitting.schedule", {"mode", "cycles"});
      cfg.splitting.schedule.mode = get_or<std::string>(sc, "mode", "splitting.schedule", "classic");
      if (sc.contains("cycles")) cfg.splitting.schedule.cycles = plan_from_json(sc.at("cycles"));
    }
  }
  const std::string& mode = cfg.splitting.schedule.mode;
  if (mode != "classic" && mode != "custom" && !product_mode(mode))
    throw Error("splitting.schedule.mode must be classic, product, custom or literal_product");
  if (mode == "custom" && !cfg.splitting.schedule.cycles) throw Error("custom schedule mode needs 'cycles'");

  if (doc.contains("solve")) {
    const json& s = doc.at("solve");
    reject_unknown(s, "solve", {"max_iterations", "stop_gap", "nested_bcm_sweeps", "nested_tol", "workers",
                                "check_level", "z_init", "z_values"});
    SolveConfig& sc = cfg.solve;
    sc.max_iterations = get_or<int>(s, "max_iterations", "solve", sc.max_iterations);
    sc.stop_gap = get_or<double>(s, "stop_gap", "solve", sc.stop_gap);
    sc.nested_bcm_sweeps = get_or<int>(s, "nested_bcm_sweeps", "solve", sc.nested_bcm_sweeps);
    sc.nested_tol = get_or<double>(s, "nested_tol", "solve", sc.nested_tol);
    sc.workers = get_or<int>(s, "workers", "solve", sc.workers);
    sc.check_level = get_or<std::string>(s, "check_level", "solve", sc.check_level);
    sc.z_init = get_or<std::string>(s, "z_init", "solve", sc.z_init);
    sc.z_values = get_or<std::vector<std::vector<double>>>(s, "z_values", "solve", {});
    parse_check_level(sc.check_level);
    if (sc.z_init != "zeros" && sc.z_init != "explicit") throw Error("solve.z_init must be zeros or explicit");
    if (sc.max_iterations < 1) throw Error("solve.max_iterations must be positive");
    if (sc.nested_bcm_sweeps < 1) throw Error("solve.nested_bcm_sweeps must be positive");
    if (sc.workers < 1) throw Error("solve.workers must be positive");
    if (sc.stop_gap < 0 || sc.nested_tol < 0) throw Error("solve tolerances must be nonnegative");
  }

  if (doc.contains("output")) {
    const json& o = doc.at("output");
    reject_unknown(o, "output", {"trace_path", "format", "per_sweep"});
    cfg.output.trace_path = get_or<std::string>(o, "trace_path", "output", "");
    cfg.output.format = get_or<std::string>(o, "format", "output", "csv");
    cfg.output.per_sweep = get_or<bool>(o, "per_sweep", "output", false);
    if (cfg.output.format != "csv" && cfg.output.format != "json") throw Error("output.format must be csv or json");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

json to_json(const RunConfig& cfg) {
  json problem = {{"dim", cfg.problem.dim}, {"x0", cfg.problem.x0}, {"terms", json::array()}};
  for (const auto& t : cfg.problem.terms) problem["terms"].push_back(term_to_json(t));
  if (cfg.problem.random) {
    const auto& rc = *cfg.problem.random;
    problem["random"] = {{"kind", rc.kind}, {"r", rc.r}, {"dim", rc.dim}, {"seed", rc.seed}};
  }
  json schedule = {{"mode", cfg.splitting.schedule.mode}};
  if (cfg.splitting.schedule.cycles) schedule["cycles"] = plan_to_json(*cfg.splitting.schedule.cycles);
  const SolveConfig& s = cfg.solve;
  return {{"problem", problem},
          {"splitting", {{"m", cfg.splitting.m}, {"schedule", schedule}}},
          {"solve",
           {{"max_iterations", s.max_iterations},
            {"stop_gap", s.stop_gap},
            {"nested_bcm_sweeps", s.nested_bcm_sweeps},
            {"nested_tol", s.nested_tol},
            {"workers", s.workers},
            {"check_level", s.check_level},
            {"z_init", s.z_init},
            {"z_values", s.z_values}}},
          {"output",
           {{"trace_path", cfg.output.trace_path}, {"format", cfg.output.format}, {"per_sweep", cfg.output.per_sweep}}}};
}

ProblemSpec<double> build_problem(const RunConfig& cfg) {
  VectorXd x0;
  std::vector<ConvexTerm<double>> terms;
  if (cfg.problem.random) {
    const auto& rc = *cfg.problem.random;
    RandomInstance<double> inst = random_instance<double>(rc.seed, parse_fixture_kind(rc.kind), rc.r, rc.dim);
    x0 = std::move(inst.x0);
    terms = std::move(inst.terms);
  } else {
    const int dim = cfg.problem.dim > 0 ? cfg.problem.dim : static_cast<int>(cfg.problem.x0.size());
    if (dim < 1) throw Error("problem.dim must be positive");
    x0 = to_vector(cfg.problem.x0, dim, "problem.x0");
    for (std::size_t k = 0; k < cfg.problem.terms.size(); ++k)
      terms.push_back(build_term(cfg.problem.terms[k], dim, "problem.terms[" + std::to_string(k) + "]"));
    if (terms.empty()) throw Error("problem.terms is empty");
  }
  const int r = static_cast<int>(terms.size());
  const std::string& mode = cfg.splitting.schedule.mode;
  int m = cfg.splitting.m;
  if (mode == "classic") {
    m = 0;
  } else if (product_mode(mode)) {
    if (r < 2) throw Error("product schedule needs at least two terms");
    for (const auto& t : terms)
      if (!t.is_indicator()) throw Error("product schedule needs every term to be a set indicator");
    m = r - 1;
  }
  if (m < 0) throw Error("splitting.m must be nonnegative");
  return ProblemSpec<double>(std::move(x0), std::move(terms), m);
}

CyclePlan build_plan(const RunConfig& cfg, const ProblemSpec<double>& spec) {
  const std::string& mode = cfg.splitting.schedule.mode;
  if (mode == "classic") return classic_dykstra_schedule(spec.r());
  if (product_mode(mode)) return product_space_schedule(spec.r());
  CyclePlan plan = *cfg.splitting.schedule.cycles;
  check_structure(plan, spec.r(), spec.m());
  return plan;
}

CheckLevel parse_check_level(const std::string& name) {
  if (name == "off") return CheckLevel::off;
  if (name == "sweep") return CheckLevel::sweep;
  if (name == "full") return CheckLevel::full;
  throw Error("solve.check_level must be off, sweep or full");
}

SolveParams build_params(const RunConfig& cfg) {
  SolveParams p;
  p.max_iterations = cfg.solve.max_iterations;
  p.stop_gap = cfg.solve.stop_gap;
  p.nested_bcm_sweeps = cfg.solve.nested_bcm_sweeps;
  p.nested_tol = cfg.solve.nested_tol;
  p.workers = cfg.solve.workers;
  p.check_level = parse_check_level(cfg.solve.check_level);
  p.per_sweep_trace = cfg.output.per_sweep;
  return p;
}

std::optional<DualState<double>> build_initial_state(const RunConfig& cfg, const ProblemSpec<double>& spec) {
  if (cfg.solve.z_init == "zeros") return std::nullopt;
  const auto& values = cfg.solve.z_values;
  // The r user duals are required; missing copy duals start at zero.
  if (static_cast<int>(values.size()) != spec.r() && static_cast<int>(values.size()) != spec.size())
    throw DimensionError("solve.z_values needs " + std::to_string(spec.r()) + " or " + std::to_string(spec.size()) +
                         " vectors");
  DualState<double> state = DualState<double>::zeros(spec);
  for (std::size_t k = 0; k < values.size(); ++k)
    state.z[k] = to_vector(values[k], spec.dim(), "solve.z_values[" + std::to_string(k) + "]");
  return state;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow<double>>& rows,
                     const std::vector<std::string>& notes) {
  for (const auto& note : notes) os << "# " << note << '\n';
  os << kTraceHeader << '\n';
  for (const auto& row : rows) {
    os << row.n << ',' << row.w << ',' << format_number(row.F) << ',' << format_number(row.v_diff) << ','
       << format_number(row.gamma_n) << ',' << format_number(row.growth_monitor) << ','
       << format_number(row.cert_max_residual) << ',' << (row.approximate ? 1 : 0) << '\n';
  }
}

void write_trace_json(std::ostream& os, const std::vector<TraceRow<double>>& rows,
                      const std::vector<std::string>& notes) {
  auto number = [](double v) { return std::isfinite(v) ? json(v) : json(format_number(v)); };
  json out = {{"notes", notes}, {"rows", json::array()}};
  for (const auto& row : rows) {
    json inner = json::object();
    for (const auto& [j, d] : row.inner_diffs) inner[std::to_string(j)] = number(d);
    out["rows"].push_back({{"n", row.n},
                           {"w", row.w},
                           {"F", number(row.F)},
                           {"v_diff", number(row.v_diff)},
                           {"inner_diffs", inner},
                           {"gamma_n", number(row.gamma_n)},
                           {"growth_monitor", number(row.growth_monitor)},
                           {"cert_max_residual", number(row.cert_max_residual)},
                           {"gap", number(row.gap)},
                           {"approx_flag", row.approximate}});
  }
  os << out.dump(2) << '\n';
}

void write_trace(const RunConfig& cfg, const std::vector<TraceRow<double>>& rows, const std::vector<std::string>& notes) {
  if (cfg.output.trace_path.empty()) return;
  std::ofstream out(cfg.output.trace_path);
  if (!out) throw Error("cannot write trace '" + cfg.output.trace_path + "'");
  if (cfg.output.format == "json") {
    write_trace_json(out, rows, notes);
  } else {
    write_trace_csv(out, rows, notes);
  }
}

}  // namespace dyksplit
