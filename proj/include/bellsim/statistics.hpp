#pragma once

#include "bellsim/events.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace bellsim {

// Coincidence counts N[a][b][A][B] in the Dims::index layout.
class SummaryTable {
public:
  SummaryTable() = default;
  explicit SummaryTable(Dims dims);
  SummaryTable(Dims dims, std::vector<std::uint64_t> counts);

  const Dims& dims() const noexcept { return dims_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t count(int a, int b, int A, int B) const { return counts_[dims_.index(a, b, A, B)]; }
  // n_ab: pairs recorded under setting pair (a, b).
  std::uint64_t setting_pair_count(int a, int b) const;

  void add(int a, int b, int A, int B, std::uint64_t n = 1);
  // Associative merge of partial tabulations.
  SummaryTable& merge(const SummaryTable& other);

  friend bool operator==(const SummaryTable&, const SummaryTable&) = default;

private:
  Dims dims_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

struct ConditionalTable {
  int setting_a = 0;
  int setting_b = 0;
  int outcomes_a = 2;
  int outcomes_b = 2;
  std::uint64_t n = 0;
  std::vector<double> probs;  // [A][B], all zero when empty()

  bool empty() const noexcept { return n == 0; }
  double p(int A, int B) const { return probs[static_cast<std::size_t>(A) * outcomes_b + B]; }
};

struct ZScore {
  char arm = 'A';        // arm whose marginal is compared
  int setting = 0;       // that arm's setting
  int outcome = 0;
  int foreign_first = 0; // the two remote settings being compared
  int foreign_second = 0;
  double z = 0.0;
};

struct NoSignalingReport {
  std::vector<ZScore> scores;
  double max_abs_z = 0.0;
  double threshold = 5.0;
  bool pass = true;
  std::vector<std::pair<int, int>> skipped_pairs;  // (a, b) with n_ab = 0
};

struct ChshResult {
  double value = 0.0;
  std::array<int, 4> signs{};  // applied to E_11, E_12, E_21, E_22
  std::array<double, 4> correlators{};
  // Delta-method standard error sum_ij sqrt((1 - E_ij^2) / n_ij).
  double sigma = 0.0;
};

// Throws InvalidArgument naming the pair index when a field is out of range.
SummaryTable tabulate(const PairSet& pairs, const Dims& dims);
SummaryTable tabulate(const PairSet& pairs);

// One table per setting pair, a-major order; empty slices are flagged, not dropped.
std::vector<ConditionalTable> conditionals(const SummaryTable& table);

// Two-proportion pooled z-test of p(A|a,b) against p(A|a,b') for every a, A
// and pair b < b' (and symmetrically for arm B). Passes iff all |z| <= threshold.
NoSignalingReport no_signaling_check(const SummaryTable& table, double z_threshold = 5.0);

// E = sum_AB s_A s_B p(A, B) with s = +1 for outcome 0 and -1 for outcome 1.
// Throws InvalidArgument for non-binary alphabets or an empty table.
double correlator(const ConditionalTable& table);

// Largest |sum of signed correlators| over the 8 sign patterns with an odd
// number of minus signs. Tables must be (0,0), (0,1), (1,0), (1,1) of a binary
// scenario; a missing or empty setting pair throws InvalidArgument.
ChshResult chsh(const std::vector<ConditionalTable>& tables);
ChshResult chsh(const std::array<double, 4>& correlators);

}  // namespace bellsim
