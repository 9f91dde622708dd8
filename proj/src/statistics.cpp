#include "bellsim/statistics.hpp"

#include "bellsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bellsim {

namespace {

void check_dims(const Dims& d) {
  if (d.settings_a < 1 || d.settings_b < 1 || d.outcomes_a < 2 || d.outcomes_b < 2)
    throw InvalidArgument("invalid dimensions");
}

}  // namespace

SummaryTable::SummaryTable(Dims dims) : dims_(dims), counts_(dims.cells(), 0) { check_dims(dims); }

SummaryTable::SummaryTable(Dims dims, std::vector<std::uint64_t> counts)
    : dims_(dims), counts_(std::move(counts)) {
  check_dims(dims);
  if (counts_.size() != dims_.cells()) throw InvalidArgument("count array has the wrong size");
  for (auto c : counts_) total_ += c;
}

std::uint64_t SummaryTable::setting_pair_count(int a, int b) const {
  std::uint64_t n = 0;
  for (int A = 0; A < dims_.outcomes_a; ++A)
    for (int B = 0; B < dims_.outcomes_b; ++B) n += count(a, b, A, B);
  return n;
}

void SummaryTable::add(int a, int b, int A, int B, std::uint64_t n) {
  counts_[dims_.index(a, b, A, B)] += n;
  total_ += n;
}

SummaryTable& SummaryTable::merge(const SummaryTable& other) {
  if (!(dims_ == other.dims_)) throw InvalidArgument("merge: dimension mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_ += other.total_;
  return *this;
}

SummaryTable tabulate(const PairSet& pairs, const Dims& dims) {
  SummaryTable table(dims);
  for (std::size_t i = 0; i < pairs.pairs.size(); ++i) {
    const auto& p = pairs.pairs[i];
    if (p.setting_a < 0 || p.setting_a >= dims.settings_a || p.setting_b < 0 ||
        p.setting_b >= dims.settings_b || p.outcome_a < 0 || p.outcome_a >= dims.outcomes_a ||
        p.outcome_b < 0 || p.outcome_b >= dims.outcomes_b)
      throw InvalidArgument("pair " + std::to_string(i) + " lies outside the declared dimensions");
    table.add(p.setting_a, p.setting_b, p.outcome_a, p.outcome_b);
  }
  return table;
}

SummaryTable tabulate(const PairSet& pairs) { return tabulate(pairs, pairs.dims); }

std::vector<ConditionalTable> conditionals(const SummaryTable& table) {
  const Dims& d = table.dims();
  std::vector<ConditionalTable> out;
  out.reserve(static_cast<std::size_t>(d.settings_a) * d.settings_b);
  for (int a = 0; a < d.settings_a; ++a)
    for (int b = 0; b < d.settings_b; ++b) {
      ConditionalTable c;
      c.setting_a = a;
      c.setting_b = b;
      c.outcomes_a = d.outcomes_a;
      c.outcomes_b = d.outcomes_b;
      c.n = table.setting_pair_count(a, b);
      c.probs.assign(static_cast<std::size_t>(d.outcomes_a) * d.outcomes_b, 0.0);
      if (c.n > 0)
        for (int A = 0; A < d.outcomes_a; ++A)
          for (int B = 0; B < d.outcomes_b; ++B)
            c.probs[static_cast<std::size_t>(A) * d.outcomes_b + B] =
                static_cast<double>(table.count(a, b, A, B)) / static_cast<double>(c.n);
      out.push_back(std::move(c));
    }
  return out;
}

NoSignalingReport no_signaling_check(const SummaryTable& table, double z_threshold) {
  if (!(z_threshold > 0.0)) throw InvalidArgument("z threshold must be positive");
  const Dims& d = table.dims();
  NoSignalingReport report;
  report.threshold = z_threshold;

  std::vector<std::uint64_t> n(static_cast<std::size_t>(d.settings_a) * d.settings_b);
  for (int a = 0; a < d.settings_a; ++a)
    for (int b = 0; b < d.settings_b; ++b) {
      n[static_cast<std::size_t>(a) * d.settings_b + b] = table.setting_pair_count(a, b);
      if (n[static_cast<std::size_t>(a) * d.settings_b + b] == 0) report.skipped_pairs.emplace_back(a, b);
    }
  auto n_ab = [&](int a, int b) { return n[static_cast<std::size_t>(a) * d.settings_b + b]; };

  auto z_of = [](std::uint64_t k1, std::uint64_t n1, std::uint64_t k2, std::uint64_t n2) {
    double p1 = static_cast<double>(k1) / static_cast<double>(n1);
    double p2 = static_cast<double>(k2) / static_cast<double>(n2);
    double pooled = static_cast<double>(k1 + k2) / static_cast<double>(n1 + n2);
    double se = std::sqrt(pooled * (1.0 - pooled) *
                          (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
    // se == 0 only when both proportions are 0 or both are 1.
    return se > 0.0 ? (p1 - p2) / se : 0.0;
  };

  // Arm A: p(A | a, b) vs p(A | a, b').
  for (int a = 0; a < d.settings_a; ++a)
    for (int b1 = 0; b1 < d.settings_b; ++b1)
      for (int b2 = b1 + 1; b2 < d.settings_b; ++b2) {
        if (n_ab(a, b1) == 0 || n_ab(a, b2) == 0) continue;
        for (int A = 0; A < d.outcomes_a; ++A) {
          std::uint64_t k1 = 0, k2 = 0;
          for (int B = 0; B < d.outcomes_b; ++B) {
            k1 += table.count(a, b1, A, B);
            k2 += table.count(a, b2, A, B);
          }
          report.scores.push_back({'A', a, A, b1, b2, z_of(k1, n_ab(a, b1), k2, n_ab(a, b2))});
        }
      }
  // Arm B: p(B | a, b) vs p(B | a', b).
  for (int b = 0; b < d.settings_b; ++b)
    for (int a1 = 0; a1 < d.settings_a; ++a1)
      for (int a2 = a1 + 1; a2 < d.settings_a; ++a2) {
        if (n_ab(a1, b) == 0 || n_ab(a2, b) == 0) continue;
        for (int B = 0; B < d.outcomes_b; ++B) {
          std::uint64_t k1 = 0, k2 = 0;
          for (int A = 0; A < d.outcomes_a; ++A) {
            k1 += table.count(a1, b, A, B);
            k2 += table.count(a2, b, A, B);
          }
          report.scores.push_back({'B', b, B, a1, a2, z_of(k1, n_ab(a1, b), k2, n_ab(a2, b))});
        }
      }
  for (const auto& s : report.scores) report.max_abs_z = std::max(report.max_abs_z, std::abs(s.z));
  report.pass = report.max_abs_z <= z_threshold;
  return report;
}

double correlator(const ConditionalTable& table) {
  if (table.outcomes_a != 2 || table.outcomes_b != 2)
    throw InvalidArgument("correlator needs binary outcomes on both arms");
  if (table.empty()) throw InvalidArgument("correlator of an empty setting pair");
  double e = table.p(0, 0) - table.p(0, 1) - table.p(1, 0) + table.p(1, 1);
  return std::clamp(e, -1.0, 1.0);
}

ChshResult chsh(const std::array<double, 4>& e) {
  ChshResult best;
  best.correlators = e;
  best.value = -1.0;
  // Sign patterns in a fixed order; the first maximizer is kept.
  for (int mask = 0; mask < 16; ++mask) {
    std::array<int, 4> s{};
    int minus = 0;
    for (int i = 0; i < 4; ++i) {
      s[i] = (mask >> (3 - i)) & 1 ? -1 : 1;
      minus += s[i] < 0;
    }
    if (minus % 2 == 0) continue;
    double v = std::abs(s[0] * e[0] + s[1] * e[1] + s[2] * e[2] + s[3] * e[3]);
    if (v > best.value) {
      best.value = v;
      best.signs = s;
    }
  }
  return best;
}

ChshResult chsh(const std::vector<ConditionalTable>& tables) {
  std::array<const ConditionalTable*, 4> slot{};
  for (const auto& t : tables) {
    if (t.setting_a > 1 || t.setting_b > 1) continue;
    slot[static_cast<std::size_t>(t.setting_a * 2 + t.setting_b)] = &t;
  }
  std::array<double, 4> e{};
  double sigma = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (!slot[i] || slot[i]->empty())
      throw InvalidArgument("chsh: setting pair (" + std::to_string(i / 2) + "," +
                            std::to_string(i % 2) + ") missing or empty");
    e[i] = correlator(*slot[i]);
    sigma += std::sqrt((1.0 - e[i] * e[i]) / static_cast<double>(slot[i]->n));
  }
  ChshResult r = chsh(e);
  r.sigma = sigma;
  return r;
}

}  // namespace bellsim
