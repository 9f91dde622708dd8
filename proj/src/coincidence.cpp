#include "bellsim/coincidence.hpp"

#include "bellsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>
#include <utility>
#include <vector>

namespace bellsim {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct Node {
  double time;
  bool is_b;
  std::size_t index;  // position in the source record
};

// A events precede B events at equal times; each arm keeps its own order.
std::vector<Node> merge_streams(const std::vector<DetectionEvent>& a,
                                const std::vector<DetectionEvent>& b) {
  std::vector<Node> merged;
  merged.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].time <= b[j].time)) {
      merged.push_back({a[i].time, false, i});
      ++i;
    } else {
      merged.push_back({b[j].time, true, j});
      ++j;
    }
  }
  return merged;
}

using Matching = std::vector<std::pair<std::size_t, std::size_t>>;  // (index_a, index_b)

Matching match_greedy_nearest(const std::vector<Node>& merged, double tau) {
  const std::size_t n = merged.size();
  std::vector<std::size_t> prev(n), next(n);
  std::vector<char> alive(n, 1);
  for (std::size_t k = 0; k < n; ++k) {
    prev[k] = k == 0 ? kNone : k - 1;
    next[k] = k + 1 == n ? kNone : k + 1;
  }
  using Gap = std::tuple<double, std::size_t, std::size_t>;  // (gap, left, right)
  std::priority_queue<Gap, std::vector<Gap>, std::greater<>> heap;
  auto consider = [&](std::size_t left, std::size_t right) {
    if (left == kNone || right == kNone) return;
    if (merged[left].is_b == merged[right].is_b) return;
    double gap = merged[right].time - merged[left].time;
    if (gap <= tau) heap.emplace(gap, left, right);
  };
  for (std::size_t k = 0; k + 1 < n; ++k) consider(k, k + 1);

  Matching out;
  while (!heap.empty()) {
    auto [gap, left, right] = heap.top();
    heap.pop();
    if (!alive[left] || !alive[right] || next[left] != right) continue;
    alive[left] = alive[right] = 0;
    const Node& l = merged[left];
    const Node& r = merged[right];
    out.emplace_back(l.is_b ? r.index : l.index, l.is_b ? l.index : r.index);
    std::size_t before = prev[left], after = next[right];
    if (before != kNone) next[before] = after;
    if (after != kNone) prev[after] = before;
    consider(before, after);
  }
  return out;
}

Matching match_first_within_window(const std::vector<DetectionEvent>& a,
                                   const std::vector<DetectionEvent>& b, double tau) {
  Matching out;
  std::size_t j = 0;
  for (std::size_t i = 0; i < a.size() && j < b.size(); ++i) {
    while (j < b.size() && a[i].time - b[j].time > tau) ++j;
    if (j < b.size() && std::abs(b[j].time - a[i].time) <= tau) {
      out.emplace_back(i, j);
      ++j;
    }
  }
  return out;
}

// Rectangular min-cost assignment (rows <= cols), potentials method.
// Returns the column assigned to each row.
std::vector<std::size_t> assign_min_cost(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  const std::size_t m = n ? cost.front().size() : 0;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      std::size_t i0 = p[j0], j1 = 0;
      double delta = inf;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<std::size_t> row_to_col(n, kNone);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j]) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

Matching match_optimal(const std::vector<Node>& merged, const std::vector<DetectionEvent>& a,
                       const std::vector<DetectionEvent>& b, double tau) {
  Matching out;
  std::size_t start = 0;
  while (start < merged.size()) {
    std::size_t end = start + 1;
    while (end < merged.size() && merged[end].time - merged[end - 1].time <= tau) ++end;
    std::vector<std::size_t> ia, ib;
    for (std::size_t k = start; k < end; ++k)
      (merged[k].is_b ? ib : ia).push_back(merged[k].index);
    start = end;
    if (ia.empty() || ib.empty()) continue;

    bool a_rows = ia.size() <= ib.size();
    const auto& rows = a_rows ? ia : ib;
    const auto& cols = a_rows ? ib : ia;
    // Each pair earns -(rows + 1), which dominates the summed scaled gaps, so
    // cardinality is maximized first. Cost 0 means "left unmatched".
    const double reward = static_cast<double>(rows.size()) + 1.0;
    std::vector<std::vector<double>> cost(rows.size(), std::vector<double>(cols.size(), 0.0));
    std::vector<std::vector<char>> edge(rows.size(), std::vector<char>(cols.size(), 0));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < cols.size(); ++c) {
        double ta = a_rows ? a[rows[r]].time : a[cols[c]].time;
        double tb = a_rows ? b[cols[c]].time : b[rows[r]].time;
        double gap = std::abs(ta - tb);
        if (gap <= tau) {
          cost[r][c] = gap / tau - reward;
          edge[r][c] = 1;
        }
      }
    auto assignment = assign_min_cost(cost);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::size_t c = assignment[r];
      if (c == kNone || !edge[r][c]) continue;
      if (a_rows) out.emplace_back(rows[r], cols[c]);
      else out.emplace_back(cols[c], rows[r]);
    }
  }
  return out;
}

// Events having more than one opposite-arm event within tau.
std::size_t count_multi_candidates(const std::vector<DetectionEvent>& x,
                                   const std::vector<DetectionEvent>& y, double tau) {
  std::size_t count = 0, lo = 0, hi = 0;
  for (const auto& e : x) {
    while (lo < y.size() && e.time - y[lo].time > tau) ++lo;
    if (hi < lo) hi = lo;
    while (hi < y.size() && y[hi].time - e.time <= tau) ++hi;
    if (hi - lo > 1) ++count;
  }
  return count;
}

}  // namespace

PairSet match_events(const ArmRecord& arm_a, const ArmRecord& arm_b, double tau,
                     MatchPolicy policy) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw InvalidArgument("coincidence window tau must be positive and finite");
  const auto& a = arm_a.events();
  const auto& b = arm_b.events();

  Matching matching;
  switch (policy) {
    case MatchPolicy::GreedyNearest:
      matching = match_greedy_nearest(merge_streams(a, b), tau);
      break;
    case MatchPolicy::FirstWithinWindow:
      matching = match_first_within_window(a, b, tau);
      break;
    case MatchPolicy::Optimal:
      if (a.size() >= kOptimalMatchLimit || b.size() >= kOptimalMatchLimit)
        throw ResourceError("optimal matching is limited to streams below " +
                            std::to_string(kOptimalMatchLimit) + " events");
      matching = match_optimal(merge_streams(a, b), a, b, tau);
      break;
  }
  std::sort(matching.begin(), matching.end());

  PairSet ps;
  ps.tau = tau;
  ps.policy = policy;
  ps.dims = Dims{arm_a.num_settings(), arm_b.num_settings(), arm_a.num_outcomes(),
                 arm_b.num_outcomes()};
  ps.pairs.reserve(matching.size());
  for (auto [i, j] : matching)
    ps.pairs.push_back({a[i].outcome, a[i].setting, b[j].outcome, b[j].setting, a[i].time,
                        b[j].time, i, j});
  auto& d = ps.diagnostics;
  d.matched = ps.pairs.size();
  d.unmatched_a = a.size() - d.matched;
  d.unmatched_b = b.size() - d.matched;
  d.multi_candidate_events = count_multi_candidates(a, b, tau) + count_multi_candidates(b, a, tau);
  d.tau = tau;
  d.policy = policy;
  return ps;
}

}  // namespace bellsim
