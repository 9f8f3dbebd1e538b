#include "dyksplit/schedule.hpp"

#include "dyksplit/common.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace dyksplit {

namespace {

std::string set_string(const IndexSet& s) {
  std::ostringstream os;
  os << '{';
  for (std::size_t k = 0; k < s.size(); ++k) os << (k ? "," : "") << s[k];
  os << '}';
  return os.str();
}

bool contains(const IndexSet& s, int i) { return std::binary_search(s.begin(), s.end(), i); }

bool intersects(const IndexSet& a, const IndexSet& b) {
  return std::any_of(a.begin(), a.end(), [&](int i) { return contains(b, i); });
}

std::string cycle_name(int cycle) {
  return cycle == 0 ? std::string("periodic pattern") : "cycle " + std::to_string(cycle);
}

void check_sweeps(const std::vector<SweepPlan>& sweeps, int r, int m, int cycle) {
  const int size = r + m;
  for (std::size_t w = 0; w < sweeps.size(); ++w) {
    const SweepPlan& sw = sweeps[w];
    const std::string where = cycle_name(cycle) + ", sweep " + std::to_string(w + 1) + ": ";
    auto fail = [&](const std::string& what) { throw ScheduleError(where + what); };
    auto check_sorted = [&](const IndexSet& s, const std::string& label) {
      if (!std::is_sorted(s.begin(), s.end()) || std::adjacent_find(s.begin(), s.end()) != s.end())
        fail(label + " " + set_string(s) + " must be sorted without duplicates");
      for (int i : s)
        if (i < 1 || i > size) fail(label + " index " + std::to_string(i) + " outside 1.." + std::to_string(size));
    };
    check_sorted(sw.outer, "outer set");
    std::set<int> seen(sw.outer.begin(), sw.outer.end());
    for (const auto& [j, block] : sw.inner) {
      const std::string label = "inner block S'_" + std::to_string(j);
      if (j <= r || j > size) fail(label + " must be governed by a copy index in " + std::to_string(r + 1) +
                                   ".." + std::to_string(size));
      check_sorted(block, label);
      if (block.empty()) continue;
      if (!contains(block, j)) fail(label + " " + set_string(block) + " must contain " + std::to_string(j));
      if (block.size() < 2) fail(label + " must contain a term index besides " + std::to_string(j));
      for (int i : block) {
        if (i != j && i > r) fail(label + " may only hold term indices and " + std::to_string(j));
        if (!seen.insert(i).second)
          fail("index " + std::to_string(i) + " appears in more than one of the outer set and inner blocks");
      }
    }
  }
}

}  // namespace

bool SweepPlan::touches(int i) const {
  if (contains(outer, i)) return true;
  return std::any_of(inner.begin(), inner.end(), [&](const auto& kv) { return contains(kv.second, i); });
}

const std::vector<SweepPlan>& CyclePlan::cycle(int n) const {
  if (n >= 1 && n <= static_cast<int>(prefix.size())) return prefix[static_cast<std::size_t>(n - 1)];
  return pattern;
}

void check_structure(const CyclePlan& plan, int r, int m) {
  if (r < 1 || m < 0) throw ScheduleError("schedule needs r >= 1 and m >= 0");
  if (plan.pattern.empty()) throw ScheduleError("schedule needs at least one sweep per cycle");
  for (std::size_t k = 0; k < plan.prefix.size(); ++k) {
    if (plan.prefix[k].size() != plan.pattern.size())
      throw ScheduleError(cycle_name(static_cast<int>(k + 1)) + " has " + std::to_string(plan.prefix[k].size()) +
                          " sweeps, the pattern has " + std::to_string(plan.pattern.size()));
    check_sweeps(plan.prefix[k], r, m, static_cast<int>(k + 1));
  }
  check_sweeps(plan.pattern, r, m, 0);
}

CycleAnalysis analyze_cycle(const std::vector<SweepPlan>& sweeps, int r, int m, int cycle_label) {
  CycleAnalysis out;
  const int wbar = static_cast<int>(sweeps.size());
  auto sweep = [&](int w) -> const SweepPlan& { return sweeps[static_cast<std::size_t>(w - 1)]; };

  for (const SweepPlan& sw : sweeps) {
    if (sw.outer.size() > 1) out.sqrt_growth_ok = false;
    for (const auto& [j, block] : sw.inner)
      if (block.size() > 2) out.sqrt_growth_ok = false;
  }

  for (int i = 1; i <= r + m; ++i) {
    int p = 0;
    for (int w = wbar; w >= 1 && p == 0; --w)
      if (sweep(w).touches(i)) p = w;
    if (p == 0) {
      out.valid_A = false;
      out.violations.push_back({'A', i, 0, cycle_label,
                                cycle_name(cycle_label) + ": condition A fails for i=" + std::to_string(i) +
                                    ": index is never updated in the cycle"});
      continue;
    }
    out.p[i] = p;
    const SweepPlan& last = sweep(p);
    if (contains(last.outer, i)) continue;

    const auto governing = std::find_if(last.inner.begin(), last.inner.end(),
                                        [&](const auto& kv) { return contains(kv.second, i); });
    const int j = governing->first;
    const IndexSet& block = governing->second;
    out.governing[i] = j;

    // The latest outer solve of j before p gives the shortest window to keep frozen.
    int q = 0;
    for (int w = p - 1; w >= 1 && q == 0; --w)
      if (contains(sweep(w).outer, j)) q = w;
    const std::string head = cycle_name(cycle_label) + ": condition B fails for i=" + std::to_string(i) +
                             ": p(n," + std::to_string(i) + ")=" + std::to_string(p) + " via inner block S'_{" +
                             std::to_string(p) + "," + std::to_string(j) + "}=" + set_string(block);
    if (q == 0) {
      out.valid_B = false;
      out.violations.push_back({'B', i, p, cycle_label,
                                head + ", but " + std::to_string(j) + " is in no outer set before sweep " +
                                    std::to_string(p)});
      continue;
    }
    int clash = 0;
    for (int w = q + 1; w < p && clash == 0; ++w) {
      const SweepPlan& mid = sweep(w);
      bool hit = intersects(block, mid.outer);
      for (const auto& [jj, other] : mid.inner) hit = hit || intersects(block, other);
      if (hit) clash = w;
    }
    if (clash != 0) {
      out.valid_B = false;
      out.violations.push_back({'B', i, p, cycle_label,
                                head + ", but with q=" + std::to_string(q) + " the block is touched again at sweep " +
                                    std::to_string(clash)});
      continue;
    }
    out.q[i] = q;
  }
  return out;
}

const CycleAnalysis& ScheduleAnalysis::for_cycle(int n) const {
  if (n >= 1 && n <= static_cast<int>(prefix.size())) return prefix[static_cast<std::size_t>(n - 1)];
  return periodic;
}

ScheduleAnalysis validate(const CyclePlan& plan, int r, int m) {
  check_structure(plan, r, m);
  ScheduleAnalysis out;
  auto absorb = [&](const CycleAnalysis& c) {
    out.valid_A = out.valid_A && c.valid_A;
    out.valid_B = out.valid_B && c.valid_B;
    out.sqrt_growth_ok = out.sqrt_growth_ok && c.sqrt_growth_ok;
    out.violations.insert(out.violations.end(), c.violations.begin(), c.violations.end());
  };
  for (std::size_t k = 0; k < plan.prefix.size(); ++k) {
    out.prefix.push_back(analyze_cycle(plan.prefix[k], r, m, static_cast<int>(k + 1)));
    absorb(out.prefix.back());
  }
  out.periodic = analyze_cycle(plan.pattern, r, m, 0);
  absorb(out.periodic);
  return out;
}

namespace {

struct Deferral {
  std::vector<SweepPlan> stripped;          // sweeps with the offending blocks removed
  std::vector<std::map<int, IndexSet>> moved;  // offending blocks, grouped by original sweep
};

Deferral split_offending(const std::vector<SweepPlan>& sweeps, const CycleAnalysis& analysis) {
  std::set<std::pair<int, int>> offending;  // (sweep, j)
  for (const Violation& v : analysis.violations) {
    if (v.condition != 'B') continue;
    offending.insert({v.sweep, analysis.governing.at(v.index)});
  }
  Deferral d;
  d.stripped = sweeps;
  for (std::size_t w = 0; w < sweeps.size(); ++w) {
    std::map<int, IndexSet> moved;
    for (const auto& [j, block] : sweeps[w].inner) {
      if (offending.count({static_cast<int>(w + 1), j})) {
        moved[j] = block;
        d.stripped[w].inner.erase(j);
      }
    }
    if (!moved.empty()) d.moved.push_back(std::move(moved));
  }
  return d;
}

}  // namespace

CyclePlan rewrite_deferred(const CyclePlan& plan, int r, int m) {
  const ScheduleAnalysis analysis = validate(plan, r, m);
  if (analysis.valid_B) return plan;

  auto outer_somewhere = [&](int j) {
    auto in = [&](const std::vector<SweepPlan>& c) {
      return std::any_of(c.begin(), c.end(), [&](const SweepPlan& s) { return contains(s.outer, j); });
    };
    return in(plan.pattern) || std::any_of(plan.prefix.begin(), plan.prefix.end(), in);
  };
  for (const Violation& v : analysis.violations) {
    if (v.condition != 'B') continue;
    const CycleAnalysis& c = v.cycle == 0 ? analysis.periodic : analysis.prefix[static_cast<std::size_t>(v.cycle - 1)];
    const int j = c.governing.at(v.index);
    if (!outer_somewhere(j))
      throw ScheduleError("cannot defer block governed by " + std::to_string(j) + " for i=" +
                          std::to_string(v.index) + ": copy " + std::to_string(j) + " is never in an outer set");
  }

  // Every distinct cycle (prefix cycles, then the pattern) sheds its offending
  // blocks; cycle n + 1 opens by executing the blocks shed by cycle n.
  std::vector<Deferral> parts;
  for (std::size_t k = 0; k < plan.prefix.size(); ++k) parts.push_back(split_offending(plan.prefix[k], analysis.prefix[k]));
  parts.push_back(split_offending(plan.pattern, analysis.periodic));

  std::size_t lead = 0;
  for (const Deferral& d : parts) lead = std::max(lead, d.moved.size());

  auto assemble = [&](const std::vector<std::map<int, IndexSet>>* carried, const std::vector<SweepPlan>& stripped) {
    std::vector<SweepPlan> cyc(lead);
    if (carried)
      for (std::size_t k = 0; k < carried->size(); ++k) cyc[k].inner = (*carried)[k];
    cyc.insert(cyc.end(), stripped.begin(), stripped.end());
    return cyc;
  };

  CyclePlan out;
  out.prefix.push_back(assemble(nullptr, parts.front().stripped));
  for (std::size_t k = 1; k < parts.size(); ++k) out.prefix.push_back(assemble(&parts[k - 1].moved, parts[k].stripped));
  out.pattern = assemble(&parts.back().moved, parts.back().stripped);
  while (!out.prefix.empty() && out.prefix.back() == out.pattern) out.prefix.pop_back();

  const ScheduleAnalysis check = validate(out, r, m);
  if (!check.valid_B) {
    std::string msg = "deferring inner blocks did not repair the schedule:";
    for (const Violation& v : check.violations)
      if (v.condition == 'B') msg += "\n  " + v.message;
    throw ScheduleError(msg);
  }
  return out;
}

CyclePlan classic_dykstra_schedule(int r) {
  if (r < 1) throw ScheduleError("classic schedule needs r >= 1");
  CyclePlan plan;
  for (int w = 1; w <= r; ++w) plan.pattern.push_back(SweepPlan{{w}, {}});
  return plan;
}

CyclePlan product_space_schedule(int r) {
  if (r < 2) throw ScheduleError("product-space schedule needs r >= 2");
  SweepPlan first;
  for (int j = r + 1; j <= 2 * r - 1; ++j) first.outer.push_back(j);
  SweepPlan second;
  second.outer = {r};
  for (int j = r + 1; j <= 2 * r - 1; ++j) second.inner[j] = {j - r, j};
  CyclePlan plan;
  plan.pattern = {first, second};
  return plan;
}

std::string describe(const SweepPlan& sweep) {
  std::ostringstream os;
  os << "S=" << set_string(sweep.outer);
  for (const auto& [j, block] : sweep.inner) os << " S'_" << j << "=" << set_string(block);
  return os.str();
}

std::string describe(const CyclePlan& plan) {
  std::ostringstream os;
  auto emit = [&](const std::vector<SweepPlan>& sweeps) {
    for (std::size_t w = 0; w < sweeps.size(); ++w) os << "  w=" << w + 1 << ": " << describe(sweeps[w]) << '\n';
  };
  for (std::size_t k = 0; k < plan.prefix.size(); ++k) {
    os << "cycle " << k + 1 << ":\n";
    emit(plan.prefix[k]);
  }
  os << (plan.prefix.empty() ? "every cycle:\n" : "later cycles:\n");
  emit(plan.pattern);
  return os.str();
}

std::string describe(const ScheduleAnalysis& analysis) {
  std::ostringstream os;
  auto emit = [&](const CycleAnalysis& c, const std::string& label) {
    os << label << ":\n  p:";
    for (const auto& [i, p] : c.p) os << ' ' << i << "->" << p;
    os << "\n  q:";
    for (const auto& [i, q] : c.q) os << ' ' << i << "->" << q;
    os << '\n';
  };
  for (std::size_t k = 0; k < analysis.prefix.size(); ++k) emit(analysis.prefix[k], "cycle " + std::to_string(k + 1));
  emit(analysis.periodic, analysis.prefix.empty() ? "every cycle" : "later cycles");
  os << "condition A: " << (analysis.valid_A ? "ok" : "violated") << '\n';
  os << "condition B: " << (analysis.valid_B ? "ok" : "violated") << '\n';
  os << "sqrt-growth sufficient condition: " << (analysis.sqrt_growth_ok ? "ok" : "not met (advisory)") << '\n';
  for (const Violation& v : analysis.violations) os << "  " << v.message << '\n';
  return os.str();
}

}  // namespace dyksplit
