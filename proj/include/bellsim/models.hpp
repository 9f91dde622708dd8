#pragma once

#include "bellsim/events.hpp"
#include "bellsim/rng.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace bellsim {

// Sum-to-one tolerance for setting laws.
inline constexpr double kLawTolerance = 1e-12;
// Normalization and no-signaling tolerance for boxes.
inline constexpr double kBoxTolerance = 1e-12;

// i.i.d. trials: trial k happens at k * trial_period on both arms.
struct TrialSchedule {
  std::uint64_t num_trials = 0;
  double trial_period = 1.0;
  std::vector<double> setting_law_a{0.5, 0.5};
  std::vector<double> setting_law_b{0.5, 0.5};
  std::uint64_t seed = 0;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Local hidden variable models

struct UniformCircle {};  // lambda uniform on [0, 2pi)
struct UniformSphere {};  // lambda uniform on the unit 2-sphere
struct DiscreteLaw {
  std::vector<double> weights;
};
using HiddenVariableLaw = std::variant<UniformCircle, UniformSphere, DiscreteLaw>;

struct HiddenVariable {
  enum class Kind { Angle, Vector, Index };
  Kind kind = Kind::Angle;
  std::array<double, 3> value{};  // angle in value[0], or a unit vector
  int index = -1;                 // discrete laws only
};

HiddenVariable sample_hidden_variable(const HiddenVariableLaw& law, CounterRng& rng);

using ResponseFunction = std::function<int(int setting, const HiddenVariable&)>;

struct ArmResponse {
  int num_settings = 2;
  int num_outcomes = 2;
  ResponseFunction respond;
};

struct LhvModel {
  HiddenVariableLaw lambda_law = UniformCircle{};
  ArmResponse response_a;
  ArmResponse response_b;

  void validate() const;
};

// Binary sign response: outcome 1 iff the analyzer projection of lambda is
// negative (cos(lambda - theta) for circle laws, n(theta) . lambda for sphere
// laws with n(theta) = (sin theta, 0, cos theta)); `flip` inverts the outcome.
ResponseFunction sign_response(std::vector<double> angles, bool flip);

// A(a, lambda) = [cos(lambda - theta_a) < 0], B(b, lambda) = [cos(lambda - theta_b) >= 0].
// Gives E(a, b) = -1 + 2|theta_a - theta_b| / pi on the circle.
LhvModel sign_model(std::vector<double> angles_a, std::vector<double> angles_b,
                    HiddenVariableLaw law = UniformCircle{});

// Finite lambda with explicit response tables: table[setting][lambda] -> outcome.
LhvModel table_model(std::vector<double> weights, std::vector<std::vector<int>> table_a,
                     std::vector<std::vector<int>> table_b, int outcomes_a = 2,
                     int outcomes_b = 2);

// ---------------------------------------------------------------------------
// No-signaling boxes

class NoSignalingBox {
public:
  // `table` uses the Dims::index layout. Throws InvalidArgument unless every
  // (a, b) slice is a distribution and both arms' marginals are independent of
  // the remote setting, all within kBoxTolerance.
  NoSignalingBox(Dims dims, std::vector<double> table);

  const Dims& dims() const noexcept { return dims_; }
  const std::vector<double>& table() const noexcept { return table_; }
  double operator()(int a, int b, int A, int B) const { return table_[dims_.index(a, b, A, B)]; }
  std::span<const double> slice(int a, int b) const;

private:
  Dims dims_;
  std::vector<double> table_;
};

// Spin singlet: p(A, B | a, b) = (1 + s_A s_B E) / 4 with E = -cos(theta_a - theta_b),
// s = +1 for outcome 0 and -1 for outcome 1.
NoSignalingBox singlet_box(std::span<const double> angles_a, std::span<const double> angles_b);
// Popescu-Rohrlich box: A xor B = a * b with uniform marginals.
NoSignalingBox pr_box();
// p(A, B | a, b) = u[a][A] * v[b][B].
NoSignalingBox product_box(const std::vector<std::vector<double>>& u,
                           const std::vector<std::vector<double>>& v);
NoSignalingBox uniform_box(Dims dims);
// (1 - weight) * first + weight * second.
NoSignalingBox mix(const NoSignalingBox& first, const NoSignalingBox& second, double weight);

// Text format: header `num_settings_A=.. num_settings_B=.. num_outcomes_A=.. num_outcomes_B=..`,
// then one row per (a, b) in a-major order holding d_A * d_B probabilities, A-major.
NoSignalingBox read_box(std::istream& in);
NoSignalingBox read_box_file(const std::string& path);
void write_box(const NoSignalingBox& box, std::ostream& out);

// ---------------------------------------------------------------------------

struct DetectorModel {
  double efficiency = 1.0;
  double jitter_sigma = 0.0;
  double dark_rate = 0.0;
  double time_offset = 0.0;

  void validate() const;
};

// Per-trial substreams make the output independent of `threads`.
std::pair<ArmRecord, ArmRecord> simulate_lhv(const LhvModel& model, const TrialSchedule& schedule,
                                             unsigned threads = 1);
std::pair<ArmRecord, ArmRecord> simulate_box(const NoSignalingBox& box,
                                             const TrialSchedule& schedule,
                                             unsigned threads = 1);

// Keeps each event with probability `efficiency`, shifts kept events by
// time_offset + N(0, jitter_sigma), and adds dark counts as a Poisson process
// over [first, last] event time. Dark settings come from `dark_setting_law`, or
// from the record's empirical setting frequencies when it is empty; dark
// outcomes are uniform.
ArmRecord apply_detector(const ArmRecord& record, const DetectorModel& detector,
                         std::uint64_t seed, std::span<const double> dark_setting_law = {});

}  // namespace bellsim
