#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bellsim/errors.hpp"
#include "bellsim/events.hpp"
#include "bellsim/rng.hpp"

#include <cmath>
#include <limits>
#include <sstream>

using namespace bellsim;

namespace {

ArmRecord read(const std::string& text, std::optional<ArmHeader> declared = std::nullopt) {
  std::istringstream in(text);
  return read_arm_record(in, declared);
}

ArmRecord round_trip(const ArmRecord& r) {
  std::stringstream s;
  write_arm_record(r, s);
  return read_arm_record(s);
}

}  // namespace

TEST_CASE("empty stream with declared dimensions gives an empty record") {
  auto r = read("", ArmHeader{"A", 2, 2});
  CHECK(r.empty());
  CHECK(r.num_settings() == 2);
  CHECK_THROWS_AS(read(""), ParseError);
}

TEST_CASE("unsorted input is stable-sorted on read") {
  auto r = read("arm=A num_settings=2 num_outcomes=2\n"
                "t=2.0 setting=0 outcome=0\n"
                "t=1.0 setting=1 outcome=1\n"
                "t=3.0 setting=0 outcome=1\n");
  REQUIRE(r.size() == 3);
  CHECK(r.events()[0].time == 1.0);
  CHECK(r.events()[1].time == 2.0);
  CHECK(r.events()[2].time == 3.0);
  CHECK(r.events()[0].setting == 1);

  // Equal times keep input order.
  auto s = read("arm=B num_settings=2 num_outcomes=2\n"
                "t=1 setting=1 outcome=0\nt=0 setting=0 outcome=0\nt=1 setting=0 outcome=1\n");
  CHECK(s.events()[1] == DetectionEvent{1.0, 1, 0});
  CHECK(s.events()[2] == DetectionEvent{1.0, 0, 1});
}

TEST_CASE("bounds violations and malformed lines name the line") {
  try {
    read("arm=A num_settings=2 num_outcomes=2\nt=0 setting=0 outcome=0\nt=1 setting=5 outcome=0\n");
    FAIL("expected a ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(read("arm=A num_settings=2 num_outcomes=2\nt=0 setting=0 outcome=2\n"), ParseError);
  CHECK_THROWS_AS(read("arm=A num_settings=2 num_outcomes=2\nt=nan setting=0 outcome=0\n"), ParseError);
  CHECK_THROWS_AS(read("arm=A num_settings=2 num_outcomes=2\nt=inf setting=0 outcome=0\n"), ParseError);
  CHECK_THROWS_AS(read("arm=A num_settings=2 num_outcomes=2\nt=0 setting=0\n"), ParseError);
  CHECK_THROWS_AS(read("arm=A num_settings=2 num_outcomes=2\nt=0 setting=0 outcome=0 x=1\n"), ParseError);
  CHECK_THROWS_AS(read("arm=A num_settings=2 num_outcomes=2\nt=0x1p3 setting=0 outcome=0\n"), ParseError);
  CHECK_THROWS_AS(read("t=0 setting=0 outcome=0\n"), ParseError);
  CHECK_THROWS_AS(read("arm=A num_settings=2 num_outcomes=3\n", ArmHeader{"A", 2, 2}), ParseError);
}

TEST_CASE("header may be omitted when dimensions are declared") {
  auto r = read("# comment\n\nt=0.5 setting=1 outcome=0\n", ArmHeader{"B", 2, 2});
  CHECK(r.arm_id() == "B");
  CHECK(r.size() == 1);
}

TEST_CASE("constructor enforces invariants") {
  CHECK_THROWS_AS(ArmRecord(ArmHeader{"A", 2, 2}, {{0.0, 2, 0}}), InvalidArgument);
  CHECK_THROWS_AS(ArmRecord(ArmHeader{"A", 2, 2}, {{0.0, 0, -1}}), InvalidArgument);
  CHECK_THROWS_AS(ArmRecord(ArmHeader{"A", 2, 2},
                            {{std::numeric_limits<double>::infinity(), 0, 0}}),
                  InvalidArgument);
  CHECK_THROWS_AS(ArmRecord(ArmHeader{"A", 0, 2}, {}), InvalidArgument);
  CHECK_THROWS_AS(ArmRecord(ArmHeader{"A", 2, 1}, {}), InvalidArgument);
  CHECK_THROWS_AS(ArmRecord(ArmHeader{"has space", 2, 2}, {}), InvalidArgument);
}

TEST_CASE("write then read is the identity, bit for bit") {
  SUBCASE("non-representable decimal") {
    ArmRecord r(ArmHeader{"A", 1, 2}, {{0.1, 0, 1}, {1e-300, 0, 0}, {-0.0, 0, 0}});
    auto back = round_trip(r);
    CHECK(back == r);
    CHECK(std::signbit(back.events()[0].time) == std::signbit(r.events()[0].time));
  }
  SUBCASE("empty record writes only the header") {
    ArmRecord r(ArmHeader{"B", 3, 4}, {});
    std::stringstream s;
    write_arm_record(r, s);
    CHECK(s.str() == "arm=B num_settings=3 num_outcomes=4\n");
    CHECK(read_arm_record(s) == r);
  }
  SUBCASE("random records") {
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
      CounterRng rng(7, StreamTag::Trial, trial);
      int settings = 1 + static_cast<int>(rng() % 4);
      int outcomes = 2 + static_cast<int>(rng() % 3);
      std::vector<DetectionEvent> events(1000);
      for (auto& e : events) {
        // Raw bit patterns exercise every exponent range.
        double t = std::ldexp(rng.uniform(), static_cast<int>(rng() % 200) - 100);
        e = {t, static_cast<int>(rng() % settings), static_cast<int>(rng() % outcomes)};
      }
      ArmRecord r(ArmHeader{"A", settings, outcomes}, events);
      auto back = round_trip(r);
      REQUIRE(back == r);
      for (std::size_t i = 1; i < back.size(); ++i)
        CHECK(back.events()[i - 1].time <= back.events()[i].time);
    }
  }
}

TEST_CASE("pair sets round-trip and validate their header") {
  PairSet ps;
  ps.tau = 2.5e-7;
  ps.policy = MatchPolicy::FirstWithinWindow;
  ps.dims = Dims{2, 3, 2, 2};
  ps.pairs = {{0, 1, 1, 2, 0.1, 0.1000001, 0, 0}, {1, 0, 0, 0, 0.3, 0.2999999, 2, 1}};
  ps.diagnostics = {2, 1, 0, 0, ps.tau, ps.policy};
  std::stringstream s;
  write_pair_set(ps, s);
  CHECK(read_pair_set(s) == ps);

  std::istringstream bad_policy("tau=1 policy=nearest num_settings_A=2 num_settings_B=2 "
                                "num_outcomes_A=2 num_outcomes_B=2 matched=0 unmatched_A=0 "
                                "unmatched_B=0 multi_candidate=0\nA a B b t_A t_B i_A i_B\n");
  CHECK_THROWS_AS(read_pair_set(bad_policy), ParseError);
  std::istringstream short_rows("tau=1 policy=optimal num_settings_A=2 num_settings_B=2 "
                                "num_outcomes_A=2 num_outcomes_B=2 matched=2 unmatched_A=0 "
                                "unmatched_B=0 multi_candidate=0\nA a B b t_A t_B i_A i_B\n"
                                "0 0 0 0 1 1 0 0\n");
  CHECK_THROWS_AS(read_pair_set(short_rows), ParseError);
}

TEST_CASE("match policy labels") {
  for (auto p : {MatchPolicy::GreedyNearest, MatchPolicy::FirstWithinWindow, MatchPolicy::Optimal})
    CHECK(parse_match_policy(to_string(p)) == p);
  CHECK_THROWS_AS(parse_match_policy("nearest"), InvalidArgument);
}
