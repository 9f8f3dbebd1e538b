#pragma once

// Sweep schedules: which dual blocks are minimized at each sweep of a cycle.
//
// A sweep has an outer set S (indices minimized jointly against the rest of
// the state) and a family of disjoint inner blocks S'_j, one per quadratic
// copy j, each containing j and at least one user index. Indices are 1-based.

#include <map>
#include <string>
#include <vector>

namespace dyksplit {

using IndexSet = std::vector<int>;  // sorted, unique

struct SweepPlan {
  IndexSet outer;
  std::map<int, IndexSet> inner;  // governing copy j -> S'_j (contains j)

  bool empty() const { return outer.empty() && inner.empty(); }
  bool touches(int i) const;
  friend bool operator==(const SweepPlan&, const SweepPlan&) = default;
};

/// Sweeps of one cycle for every n. Cycles 1..prefix.size() use the explicit
/// prefix; every later cycle repeats the periodic pattern.
struct CyclePlan {
  std::vector<std::vector<SweepPlan>> prefix;
  std::vector<SweepPlan> pattern;

  int sweeps_per_cycle() const { return static_cast<int>(pattern.size()); }
  const std::vector<SweepPlan>& cycle(int n) const;
  friend bool operator==(const CyclePlan&, const CyclePlan&) = default;
};

struct Violation {
  char condition;  // 'A' or 'B'
  int index;
  int sweep;       // 0 when the index is never touched
  int cycle;       // 0 for the periodic pattern, k for prefix cycle k
  std::string message;
};

/// Touch analysis of one cycle's sweeps.
struct CycleAnalysis {
  std::map<int, int> p;              // last sweep touching i
  std::map<int, int> q;              // for indices last touched in an inner block
  std::map<int, int> governing;      // i -> j when i's last touch is S'_{p,j}
  bool valid_A = true;
  bool valid_B = true;
  bool sqrt_growth_ok = true;
  std::vector<Violation> violations;

  bool valid() const { return valid_A && valid_B; }
  bool via_inner(int i) const { return governing.count(i) != 0; }
};

struct ScheduleAnalysis {
  CycleAnalysis periodic;
  std::vector<CycleAnalysis> prefix;
  bool valid_A = true;
  bool valid_B = true;
  bool sqrt_growth_ok = true;
  std::vector<Violation> violations;

  bool valid() const { return valid_A && valid_B; }
  const CycleAnalysis& for_cycle(int n) const;
  const std::map<int, int>& p() const { return periodic.p; }
  const std::map<int, int>& q() const { return periodic.q; }
};

/// Throws ScheduleError naming the offending sweep if a plan breaks the
/// structural rules (range, disjointness, block shape).
void check_structure(const CyclePlan& plan, int r, int m);

CycleAnalysis analyze_cycle(const std::vector<SweepPlan>& sweeps, int r, int m, int cycle_label = 0);

ScheduleAnalysis validate(const CyclePlan& plan, int r, int m);

/// Moves every inner block that breaks condition B to the start of the next
/// cycle, prepending sweeps with an empty outer set. Valid plans come back
/// unchanged. Throws ScheduleError when a violation cannot be repaired.
CyclePlan rewrite_deferred(const CyclePlan& plan, int r, int m);

/// m = 0, one sweep per term: S_w = {w}.
CyclePlan classic_dykstra_schedule(int r);

/// m = r - 1, two sweeps: all copies, then {r} with blocks {j - r, j}.
CyclePlan product_space_schedule(int r);

std::string describe(const SweepPlan& sweep);
std::string describe(const CyclePlan& plan);
std::string describe(const ScheduleAnalysis& analysis);

}  // namespace dyksplit
