#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bellsim {

// One detection on one arm: outcome index, setting index, timestamp in seconds.
struct DetectionEvent {
  double time = 0.0;
  int setting = 0;
  int outcome = 0;

  friend bool operator==(const DetectionEvent&, const DetectionEvent&) = default;
};

struct ArmHeader {
  std::string arm_id = "A";
  int num_settings = 1;
  int num_outcomes = 2;

  friend bool operator==(const ArmHeader&, const ArmHeader&) = default;
};

// Raw per-arm table. Immutable once built; events are always time-sorted.
class ArmRecord {
public:
  ArmRecord() = default;
  // Validates every event against (num_settings, num_outcomes) and stable-sorts by time.
  ArmRecord(ArmHeader header, std::vector<DetectionEvent> events);

  const ArmHeader& header() const noexcept { return header_; }
  const std::string& arm_id() const noexcept { return header_.arm_id; }
  int num_settings() const noexcept { return header_.num_settings; }
  int num_outcomes() const noexcept { return header_.num_outcomes; }
  const std::vector<DetectionEvent>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }

  friend bool operator==(const ArmRecord&, const ArmRecord&) = default;

private:
  ArmHeader header_;
  std::vector<DetectionEvent> events_;
};

// Reads the line-delimited key=value event format:
//   arm=A num_settings=2 num_outcomes=2
//   t=1.5e-06 setting=0 outcome=1
// The header line may be omitted only when `declared` is given. When both are
// present they must agree. Blank lines and lines starting with '#' are skipped.
ArmRecord read_arm_record(std::istream& in,
                          const std::optional<ArmHeader>& declared = std::nullopt);
ArmRecord read_arm_record_file(const std::string& path,
                               const std::optional<ArmHeader>& declared = std::nullopt);

// Times are written in shortest round-trip decimal form, so read(write(r)) == r.
void write_arm_record(const ArmRecord& record, std::ostream& out);

// ---------------------------------------------------------------------------
// Matched pairs

enum class MatchPolicy { GreedyNearest, FirstWithinWindow, Optimal };

std::string_view to_string(MatchPolicy policy);
MatchPolicy parse_match_policy(std::string_view label);

struct CoincidencePair {
  int outcome_a = 0;
  int setting_a = 0;
  int outcome_b = 0;
  int setting_b = 0;
  double time_a = 0.0;
  double time_b = 0.0;
  // Positions of the matched events in their source ArmRecords.
  std::size_t index_a = 0;
  std::size_t index_b = 0;

  friend bool operator==(const CoincidencePair&, const CoincidencePair&) = default;
};

struct MatchDiagnostics {
  std::size_t matched = 0;
  std::size_t unmatched_a = 0;
  std::size_t unmatched_b = 0;
  std::size_t multi_candidate_events = 0;
  double tau = 0.0;
  MatchPolicy policy = MatchPolicy::GreedyNearest;

  friend bool operator==(const MatchDiagnostics&, const MatchDiagnostics&) = default;
};

struct Dims {
  int settings_a = 2;
  int settings_b = 2;
  int outcomes_a = 2;
  int outcomes_b = 2;

  std::size_t cells() const {
    return static_cast<std::size_t>(settings_a) * settings_b * outcomes_a * outcomes_b;
  }
  // Flat layout shared by boxes, count tables and witnesses: [a][b][A][B].
  std::size_t index(int a, int b, int A, int B) const {
    return ((static_cast<std::size_t>(a) * settings_b + b) * outcomes_a + A) * outcomes_b + B;
  }
  friend bool operator==(const Dims&, const Dims&) = default;
};

struct PairSet {
  double tau = 0.0;
  MatchPolicy policy = MatchPolicy::GreedyNearest;
  Dims dims;
  std::vector<CoincidencePair> pairs;  // sorted by time_a
  MatchDiagnostics diagnostics;

  friend bool operator==(const PairSet&, const PairSet&) = default;
};

// Whitespace-separated table with a key=value header carrying tau, policy,
// dimensions and diagnostics, then a column line `A a B b t_A t_B i_A i_B`.
void write_pair_set(const PairSet& pairs, std::ostream& out);
PairSet read_pair_set(std::istream& in);
PairSet read_pair_set_file(const std::string& path);

// Shortest decimal that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace bellsim
