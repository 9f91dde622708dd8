#pragma once

#include "bellsim/events.hpp"

#include <cstddef>

namespace bellsim {

// Largest per-arm stream accepted by MatchPolicy::Optimal.
inline constexpr std::size_t kOptimalMatchLimit = 10000;

// One-to-one matching of two time-sorted arm records; every returned pair has
// |t_A - t_B| <= tau. Pairs come back sorted by time_a.
//
// GreedyNearest: repeatedly pairs the globally closest unmatched A/B events
//   still within tau; among equal gaps the earlier pair wins. The closest
//   unmatched pair is always adjacent in merged time order, so this runs as a
//   heap over adjacent gaps in O(n log n).
// FirstWithinWindow: each A event in time order takes the earliest unmatched
//   B event within tau (two-pointer sweep, O(n)).
// Optimal: maximum number of pairs, then minimum total |t_A - t_B|; solved
//   by assignment on each connected block of the window graph. Throws
//   ResourceError when either stream reaches kOptimalMatchLimit events.
//
// Throws InvalidArgument unless tau > 0 and finite.
PairSet match_events(const ArmRecord& arm_a, const ArmRecord& arm_b, double tau,
                     MatchPolicy policy = MatchPolicy::GreedyNearest);

}  // namespace bellsim
