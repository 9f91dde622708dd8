#include "bellsim/events.hpp"

#include "bellsim/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>

namespace bellsim {

namespace {

struct KeyValue {
  std::string_view key;
  std::string_view value;
};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<KeyValue> split_key_values(std::string_view line, std::size_t line_no) {
  std::vector<KeyValue> out;
  for (auto token : split_ws(line)) {
    auto eq = token.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw ParseError("expected key=value, got '" + std::string(token) + "'", line_no);
    out.push_back({token.substr(0, eq), token.substr(eq + 1)});
  }
  return out;
}

bool skippable(std::string_view line) {
  auto tokens = split_ws(line);
  return tokens.empty() || tokens.front().front() == '#';
}

template <typename T>
T parse_number(std::string_view text, std::string_view field, std::size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ParseError("bad value '" + std::string(text) + "' for " + std::string(field),
                     line_no);
  return value;
}

double parse_finite(std::string_view text, std::string_view field, std::size_t line_no) {
  double v = parse_number<double>(text, field, line_no);
  if (!std::isfinite(v))
    throw ParseError("non-finite value for " + std::string(field), line_no);
  return v;
}

bool looks_like_arm_header(std::string_view line) {
  for (auto token : split_ws(line))
    if (token.starts_with("arm=")) return true;
  return false;
}

ArmHeader parse_arm_header(std::string_view line, std::size_t line_no) {
  ArmHeader h;
  bool seen_arm = false, seen_s = false, seen_d = false;
  for (auto [key, value] : split_key_values(line, line_no)) {
    if (key == "arm") {
      h.arm_id = std::string(value);
      seen_arm = true;
    } else if (key == "num_settings") {
      h.num_settings = parse_number<int>(value, key, line_no);
      seen_s = true;
    } else if (key == "num_outcomes") {
      h.num_outcomes = parse_number<int>(value, key, line_no);
      seen_d = true;
    } else {
      throw ParseError("unknown header field '" + std::string(key) + "'", line_no);
    }
  }
  if (!seen_arm || !seen_s || !seen_d)
    throw ParseError("header needs arm, num_settings and num_outcomes", line_no);
  if (h.num_settings < 1 || h.num_outcomes < 2)
    throw ParseError("header requires num_settings >= 1 and num_outcomes >= 2", line_no);
  return h;
}

void check_header(const ArmHeader& h) {
  if (h.num_settings < 1) throw InvalidArgument("num_settings must be >= 1");
  if (h.num_outcomes < 2) throw InvalidArgument("num_outcomes must be >= 2");
  if (h.arm_id.empty() || h.arm_id.find_first_of(" \t\n=") != std::string::npos)
    throw InvalidArgument("arm id must be a non-empty token");
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

ArmRecord::ArmRecord(ArmHeader header, std::vector<DetectionEvent> events)
    : header_(std::move(header)), events_(std::move(events)) {
  check_header(header_);
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const auto& e = events_[i];
    if (!std::isfinite(e.time))
      throw InvalidArgument("event " + std::to_string(i) + ": non-finite time");
    if (e.setting < 0 || e.setting >= header_.num_settings)
      throw InvalidArgument("event " + std::to_string(i) + ": setting out of range");
    if (e.outcome < 0 || e.outcome >= header_.num_outcomes)
      throw InvalidArgument("event " + std::to_string(i) + ": outcome out of range");
  }
  if (!std::is_sorted(events_.begin(), events_.end(),
                      [](const auto& x, const auto& y) { return x.time < y.time; }))
    std::stable_sort(events_.begin(), events_.end(),
                     [](const auto& x, const auto& y) { return x.time < y.time; });
}

ArmRecord read_arm_record(std::istream& in, const std::optional<ArmHeader>& declared) {
  std::optional<ArmHeader> header;
  std::vector<DetectionEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    if (!header && looks_like_arm_header(line)) {
      header = parse_arm_header(line, line_no);
      if (declared && (declared->num_settings != header->num_settings ||
                       declared->num_outcomes != header->num_outcomes))
        throw ParseError("header dimensions disagree with declared dimensions", line_no);
      continue;
    }
    if (!header) {
      if (!declared) throw ParseError("missing arm header line", line_no);
      header = *declared;
    }
    DetectionEvent e;
    bool seen_t = false, seen_s = false, seen_o = false;
    for (auto [key, value] : split_key_values(line, line_no)) {
      if (key == "t") {
        e.time = parse_finite(value, key, line_no);
        seen_t = true;
      } else if (key == "setting") {
        e.setting = parse_number<int>(value, key, line_no);
        seen_s = true;
      } else if (key == "outcome") {
        e.outcome = parse_number<int>(value, key, line_no);
        seen_o = true;
      } else {
        throw ParseError("unknown event field '" + std::string(key) + "'", line_no);
      }
    }
    if (!seen_t || !seen_s || !seen_o)
      throw ParseError("event needs t, setting and outcome", line_no);
    if (e.setting < 0 || e.setting >= header->num_settings)
      throw ParseError("setting " + std::to_string(e.setting) + " out of range [0, " +
                           std::to_string(header->num_settings) + ")",
                       line_no);
    if (e.outcome < 0 || e.outcome >= header->num_outcomes)
      throw ParseError("outcome " + std::to_string(e.outcome) + " out of range [0, " +
                           std::to_string(header->num_outcomes) + ")",
                       line_no);
    events.push_back(e);
  }
  if (in.bad()) throw ParseError("read failure");
  if (!header) {
    if (!declared) throw ParseError("empty stream without declared dimensions");
    header = *declared;
  }
  return ArmRecord(std::move(*header), std::move(events));
}

ArmRecord read_arm_record_file(const std::string& path,
                               const std::optional<ArmHeader>& declared) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return read_arm_record(in, declared);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_arm_record(const ArmRecord& record, std::ostream& out) {
  out << "arm=" << record.arm_id() << " num_settings=" << record.num_settings()
      << " num_outcomes=" << record.num_outcomes() << '\n';
  std::string line;
  for (const auto& e : record.events()) {
    line.clear();
    line += "t=";
    line += format_double(e.time);
    line += " setting=";
    line += std::to_string(e.setting);
    line += " outcome=";
    line += std::to_string(e.outcome);
    line += '\n';
    out << line;
  }
  out.flush();
  if (!out) throw std::runtime_error("write failure on event stream");
}

// ---------------------------------------------------------------------------

std::string_view to_string(MatchPolicy policy) {
  switch (policy) {
    case MatchPolicy::GreedyNearest: return "greedy-nearest";
    case MatchPolicy::FirstWithinWindow: return "first-within-window";
    case MatchPolicy::Optimal: return "optimal";
  }
  return "unknown";
}

MatchPolicy parse_match_policy(std::string_view label) {
  if (label == "greedy-nearest") return MatchPolicy::GreedyNearest;
  if (label == "first-within-window") return MatchPolicy::FirstWithinWindow;
  if (label == "optimal") return MatchPolicy::Optimal;
  throw InvalidArgument("unknown matching policy '" + std::string(label) + "'");
}

void write_pair_set(const PairSet& ps, std::ostream& out) {
  const auto& d = ps.diagnostics;
  out << "tau=" << format_double(ps.tau) << " policy=" << to_string(ps.policy)
      << " num_settings_A=" << ps.dims.settings_a << " num_settings_B=" << ps.dims.settings_b
      << " num_outcomes_A=" << ps.dims.outcomes_a << " num_outcomes_B=" << ps.dims.outcomes_b
      << " matched=" << d.matched << " unmatched_A=" << d.unmatched_a
      << " unmatched_B=" << d.unmatched_b << " multi_candidate=" << d.multi_candidate_events
      << '\n';
  out << "A a B b t_A t_B i_A i_B\n";
  std::string line;
  for (const auto& p : ps.pairs) {
    line.clear();
    line += std::to_string(p.outcome_a) + ' ' + std::to_string(p.setting_a) + ' ' +
            std::to_string(p.outcome_b) + ' ' + std::to_string(p.setting_b) + ' ' +
            format_double(p.time_a) + ' ' + format_double(p.time_b) + ' ' +
            std::to_string(p.index_a) + ' ' + std::to_string(p.index_b) + '\n';
    out << line;
  }
  out.flush();
  if (!out) throw std::runtime_error("write failure on pair stream");
}

PairSet read_pair_set(std::istream& in) {
  PairSet ps;
  std::string line;
  std::size_t line_no = 0;
  enum { Header, Columns, Rows } state = Header;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    if (state == Header) {
      int seen = 0;
      for (auto [key, value] : split_key_values(line, line_no)) {
        ++seen;
        if (key == "tau") ps.tau = parse_finite(value, key, line_no);
        else if (key == "policy") {
          try {
            ps.policy = parse_match_policy(value);
          } catch (const InvalidArgument& e) {
            throw ParseError(e.what(), line_no);
          }
        } else if (key == "num_settings_A") ps.dims.settings_a = parse_number<int>(value, key, line_no);
        else if (key == "num_settings_B") ps.dims.settings_b = parse_number<int>(value, key, line_no);
        else if (key == "num_outcomes_A") ps.dims.outcomes_a = parse_number<int>(value, key, line_no);
        else if (key == "num_outcomes_B") ps.dims.outcomes_b = parse_number<int>(value, key, line_no);
        else if (key == "matched") ps.diagnostics.matched = parse_number<std::size_t>(value, key, line_no);
        else if (key == "unmatched_A") ps.diagnostics.unmatched_a = parse_number<std::size_t>(value, key, line_no);
        else if (key == "unmatched_B") ps.diagnostics.unmatched_b = parse_number<std::size_t>(value, key, line_no);
        else if (key == "multi_candidate") ps.diagnostics.multi_candidate_events = parse_number<std::size_t>(value, key, line_no);
        else {
          throw ParseError("unknown pair-set header field '" + std::string(key) + "'", line_no);
        }
      }
      if (seen != 10) throw ParseError("incomplete pair-set header", line_no);
      if (ps.dims.settings_a < 1 || ps.dims.settings_b < 1 || ps.dims.outcomes_a < 2 ||
          ps.dims.outcomes_b < 2)
        throw ParseError("invalid dimensions in pair-set header", line_no);
      ps.diagnostics.tau = ps.tau;
      ps.diagnostics.policy = ps.policy;
      state = Columns;
    } else if (state == Columns) {
      if (split_ws(line) != std::vector<std::string_view>{"A", "a", "B", "b", "t_A", "t_B",
                                                          "i_A", "i_B"})
        throw ParseError("expected column line 'A a B b t_A t_B i_A i_B'", line_no);
      state = Rows;
    } else {
      auto f = split_ws(line);
      if (f.size() != 8) throw ParseError("expected 8 columns", line_no);
      CoincidencePair p;
      p.outcome_a = parse_number<int>(f[0], "A", line_no);
      p.setting_a = parse_number<int>(f[1], "a", line_no);
      p.outcome_b = parse_number<int>(f[2], "B", line_no);
      p.setting_b = parse_number<int>(f[3], "b", line_no);
      p.time_a = parse_finite(f[4], "t_A", line_no);
      p.time_b = parse_finite(f[5], "t_B", line_no);
      p.index_a = parse_number<std::size_t>(f[6], "i_A", line_no);
      p.index_b = parse_number<std::size_t>(f[7], "i_B", line_no);
      ps.pairs.push_back(p);
    }
  }
  if (in.bad()) throw ParseError("read failure");
  if (state == Header) throw ParseError("missing pair-set header");
  if (ps.pairs.size() != ps.diagnostics.matched)
    throw ParseError("row count " + std::to_string(ps.pairs.size()) +
                     " disagrees with matched=" + std::to_string(ps.diagnostics.matched));
  return ps;
}

PairSet read_pair_set_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return read_pair_set(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace bellsim
