#include "bellsim/models.hpp"

#include "bellsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>

namespace bellsim {

namespace {

void check_law(std::span<const double> law, const char* what) {
  if (law.empty()) throw InvalidArgument(std::string(what) + ": empty probability vector");
  double sum = 0.0;
  for (double p : law) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw InvalidArgument(std::string(what) + ": negative or non-finite probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kLawTolerance)
    throw InvalidArgument(std::string(what) + ": probabilities sum to " + std::to_string(sum));
}

// Runs body(k) for k in [0, n) split into contiguous chunks over `threads` workers.
template <typename Body>
void parallel_trials(std::uint64_t n, unsigned threads, Body&& body) {
  if (threads <= 1 || n < 4096) {
    for (std::uint64_t k = 0; k < n; ++k) body(k);
    return;
  }
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, n));
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  std::uint64_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    std::uint64_t begin = t * chunk;
    std::uint64_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] {
      for (std::uint64_t k = begin; k < end; ++k) body(k);
    });
  }
}

ArmHeader header_for(const char* arm, int settings, int outcomes) {
  return ArmHeader{arm, settings, outcomes};
}

}  // namespace

void TrialSchedule::validate() const {
  if (!(trial_period > 0.0) || !std::isfinite(trial_period))
    throw InvalidArgument("trial_period must be positive and finite");
  check_law(setting_law_a, "setting_law_a");
  check_law(setting_law_b, "setting_law_b");
}

// ---------------------------------------------------------------------------

HiddenVariable sample_hidden_variable(const HiddenVariableLaw& law, CounterRng& rng) {
  HiddenVariable lambda;
  std::visit(
      [&](const auto& l) {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, UniformCircle>) {
          lambda.kind = HiddenVariable::Kind::Angle;
          lambda.value[0] = 2.0 * std::numbers::pi * rng.uniform();
        } else if constexpr (std::is_same_v<L, UniformSphere>) {
          lambda.kind = HiddenVariable::Kind::Vector;
          double z = 2.0 * rng.uniform() - 1.0;
          double phi = 2.0 * std::numbers::pi * rng.uniform();
          double r = std::sqrt(std::max(0.0, 1.0 - z * z));
          lambda.value = {r * std::cos(phi), r * std::sin(phi), z};
        } else {
          lambda.kind = HiddenVariable::Kind::Index;
          lambda.index = rng.discrete(l.weights);
        }
      },
      law);
  return lambda;
}

ResponseFunction sign_response(std::vector<double> angles, bool flip) {
  return [angles = std::move(angles), flip](int setting, const HiddenVariable& lambda) {
    double theta = angles.at(static_cast<std::size_t>(setting));
    double projection = 0.0;
    switch (lambda.kind) {
      case HiddenVariable::Kind::Angle: projection = std::cos(lambda.value[0] - theta); break;
      case HiddenVariable::Kind::Vector:
        projection = std::sin(theta) * lambda.value[0] + std::cos(theta) * lambda.value[2];
        break;
      case HiddenVariable::Kind::Index:
        throw InvalidArgument("sign response needs a continuous hidden variable");
    }
    bool negative = projection < 0.0;
    return (negative != flip) ? 1 : 0;
  };
}

LhvModel sign_model(std::vector<double> angles_a, std::vector<double> angles_b,
                    HiddenVariableLaw law) {
  if (std::holds_alternative<DiscreteLaw>(law))
    throw InvalidArgument("sign_model needs a circle or sphere hidden variable");
  LhvModel m;
  m.lambda_law = std::move(law);
  m.response_a = {static_cast<int>(angles_a.size()), 2, sign_response(angles_a, false)};
  m.response_b = {static_cast<int>(angles_b.size()), 2, sign_response(angles_b, true)};
  m.validate();
  return m;
}

LhvModel table_model(std::vector<double> weights, std::vector<std::vector<int>> table_a,
                     std::vector<std::vector<int>> table_b, int outcomes_a, int outcomes_b) {
  auto make = [&](std::vector<std::vector<int>> table, int outcomes, const char* arm) {
    for (const auto& row : table) {
      if (row.size() != weights.size())
        throw InvalidArgument(std::string("response table ") + arm +
                              ": one entry per hidden-variable value required");
      for (int o : row)
        if (o < 0 || o >= outcomes)
          throw InvalidArgument(std::string("response table ") + arm + ": outcome out of range");
    }
    int settings = static_cast<int>(table.size());
    ResponseFunction f = [table = std::move(table)](int setting, const HiddenVariable& lambda) {
      return table.at(static_cast<std::size_t>(setting)).at(static_cast<std::size_t>(lambda.index));
    };
    return ArmResponse{settings, outcomes, std::move(f)};
  };
  LhvModel m;
  m.response_a = make(std::move(table_a), outcomes_a, "A");
  m.response_b = make(std::move(table_b), outcomes_b, "B");
  m.lambda_law = DiscreteLaw{std::move(weights)};
  m.validate();
  return m;
}

void LhvModel::validate() const {
  if (const auto* d = std::get_if<DiscreteLaw>(&lambda_law)) check_law(d->weights, "lambda law");
  for (const auto* r : {&response_a, &response_b}) {
    if (r->num_settings < 1) throw InvalidArgument("response needs at least one setting");
    if (r->num_outcomes < 2) throw InvalidArgument("response needs at least two outcomes");
    if (!r->respond) throw InvalidArgument("response function missing");
  }
}

// ---------------------------------------------------------------------------

NoSignalingBox::NoSignalingBox(Dims dims, std::vector<double> table)
    : dims_(dims), table_(std::move(table)) {
  if (dims_.settings_a < 1 || dims_.settings_b < 1 || dims_.outcomes_a < 2 ||
      dims_.outcomes_b < 2)
    throw InvalidArgument("box dimensions out of range");
  if (table_.size() != dims_.cells())
    throw InvalidArgument("box table has " + std::to_string(table_.size()) +
                          " entries, expected " + std::to_string(dims_.cells()));
  for (int a = 0; a < dims_.settings_a; ++a)
    for (int b = 0; b < dims_.settings_b; ++b) {
      double sum = 0.0;
      for (double p : slice(a, b)) {
        if (!(p >= 0.0) || !std::isfinite(p))
          throw InvalidArgument("box entry negative or non-finite");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kBoxTolerance)
        throw InvalidArgument("box slice (" + std::to_string(a) + "," + std::to_string(b) +
                              ") sums to " + std::to_string(sum));
    }
  auto marginal_a = [&](int a, int b, int A) {
    double s = 0.0;
    for (int B = 0; B < dims_.outcomes_b; ++B) s += (*this)(a, b, A, B);
    return s;
  };
  auto marginal_b = [&](int a, int b, int B) {
    double s = 0.0;
    for (int A = 0; A < dims_.outcomes_a; ++A) s += (*this)(a, b, A, B);
    return s;
  };
  for (int a = 0; a < dims_.settings_a; ++a)
    for (int A = 0; A < dims_.outcomes_a; ++A)
      for (int b = 1; b < dims_.settings_b; ++b)
        if (std::abs(marginal_a(a, b, A) - marginal_a(a, 0, A)) > kBoxTolerance)
          throw InvalidArgument("box signals from B to A at a=" + std::to_string(a));
  for (int b = 0; b < dims_.settings_b; ++b)
    for (int B = 0; B < dims_.outcomes_b; ++B)
      for (int a = 1; a < dims_.settings_a; ++a)
        if (std::abs(marginal_b(a, b, B) - marginal_b(0, b, B)) > kBoxTolerance)
          throw InvalidArgument("box signals from A to B at b=" + std::to_string(b));
}

std::span<const double> NoSignalingBox::slice(int a, int b) const {
  std::size_t width = static_cast<std::size_t>(dims_.outcomes_a) * dims_.outcomes_b;
  return std::span<const double>(table_).subspan(dims_.index(a, b, 0, 0), width);
}

NoSignalingBox singlet_box(std::span<const double> angles_a, std::span<const double> angles_b) {
  if (angles_a.empty() || angles_b.empty())
    throw InvalidArgument("singlet_box needs at least one angle per arm");
  Dims dims{static_cast<int>(angles_a.size()), static_cast<int>(angles_b.size()), 2, 2};
  std::vector<double> table(dims.cells());
  for (int a = 0; a < dims.settings_a; ++a)
    for (int b = 0; b < dims.settings_b; ++b) {
      double e = -std::cos(angles_a[a] - angles_b[b]);
      // Same-sign cells and opposite-sign cells; each pair sums to exactly 1/2.
      double same = (1.0 + e) / 4.0;
      double opposite = 0.5 - same;
      table[dims.index(a, b, 0, 0)] = same;
      table[dims.index(a, b, 1, 1)] = same;
      table[dims.index(a, b, 0, 1)] = opposite;
      table[dims.index(a, b, 1, 0)] = opposite;
    }
  return NoSignalingBox(dims, std::move(table));
}

NoSignalingBox pr_box() {
  Dims dims{2, 2, 2, 2};
  std::vector<double> table(dims.cells(), 0.0);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int A = 0; A < 2; ++A)
        for (int B = 0; B < 2; ++B)
          if ((A ^ B) == (a & b)) table[dims.index(a, b, A, B)] = 0.5;
  return NoSignalingBox(dims, std::move(table));
}

NoSignalingBox product_box(const std::vector<std::vector<double>>& u,
                           const std::vector<std::vector<double>>& v) {
  if (u.empty() || v.empty()) throw InvalidArgument("product_box needs nonempty marginals");
  Dims dims{static_cast<int>(u.size()), static_cast<int>(v.size()),
            static_cast<int>(u.front().size()), static_cast<int>(v.front().size())};
  for (const auto& row : u)
    if (static_cast<int>(row.size()) != dims.outcomes_a)
      throw InvalidArgument("product_box: ragged u");
  for (const auto& row : v)
    if (static_cast<int>(row.size()) != dims.outcomes_b)
      throw InvalidArgument("product_box: ragged v");
  std::vector<double> table(dims.cells());
  for (int a = 0; a < dims.settings_a; ++a)
    for (int b = 0; b < dims.settings_b; ++b)
      for (int A = 0; A < dims.outcomes_a; ++A)
        for (int B = 0; B < dims.outcomes_b; ++B)
          table[dims.index(a, b, A, B)] = u[a][A] * v[b][B];
  return NoSignalingBox(dims, std::move(table));
}

NoSignalingBox uniform_box(Dims dims) {
  double p = 1.0 / (static_cast<double>(dims.outcomes_a) * dims.outcomes_b);
  return NoSignalingBox(dims, std::vector<double>(dims.cells(), p));
}

NoSignalingBox mix(const NoSignalingBox& first, const NoSignalingBox& second, double weight) {
  if (!(first.dims() == second.dims())) throw InvalidArgument("mix: dimension mismatch");
  if (!(weight >= 0.0 && weight <= 1.0)) throw InvalidArgument("mix: weight outside [0, 1]");
  std::vector<double> table(first.table().size());
  for (std::size_t i = 0; i < table.size(); ++i)
    table[i] = (1.0 - weight) * first.table()[i] + weight * second.table()[i];
  return NoSignalingBox(first.dims(), std::move(table));
}

NoSignalingBox read_box(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  Dims dims{};
  bool have_header = false;
  std::vector<double> table;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string first;
    if (!(fields >> first) || first.front() == '#') continue;
    if (!have_header) {
      int seen = 0;
      fields.clear();
      fields.str(line);
      std::string token;
      while (fields >> token) {
        auto eq = token.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value header", line_no);
        std::string key = token.substr(0, eq);
        int value = 0;
        try {
          value = std::stoi(token.substr(eq + 1));
        } catch (const std::exception&) {
          throw ParseError("bad integer in '" + token + "'", line_no);
        }
        if (key == "num_settings_A") dims.settings_a = value;
        else if (key == "num_settings_B") dims.settings_b = value;
        else if (key == "num_outcomes_A") dims.outcomes_a = value;
        else if (key == "num_outcomes_B") dims.outcomes_b = value;
        else throw ParseError("unknown box header field '" + key + "'", line_no);
        ++seen;
      }
      if (seen != 4) throw ParseError("box header needs four dimension fields", line_no);
      if (dims.settings_a < 1 || dims.settings_b < 1 || dims.outcomes_a < 2 ||
          dims.outcomes_b < 2)
        throw ParseError("invalid box dimensions", line_no);
      have_header = true;
      continue;
    }
    fields.clear();
    fields.str(line);
    std::size_t width = static_cast<std::size_t>(dims.outcomes_a) * dims.outcomes_b;
    std::size_t count = 0;
    std::string token;
    while (fields >> token) {
      try {
        std::size_t used = 0;
        table.push_back(std::stod(token, &used));
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw ParseError("bad probability '" + token + "'", line_no);
      }
      ++count;
    }
    if (count != width)
      throw ParseError("expected " + std::to_string(width) + " probabilities per row", line_no);
    ++rows;
  }
  if (!have_header) throw ParseError("missing box header");
  if (rows != static_cast<std::size_t>(dims.settings_a) * dims.settings_b)
    throw ParseError("expected one row per setting pair");
  try {
    return NoSignalingBox(dims, std::move(table));
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("invalid box: ") + e.what());
  }
}

NoSignalingBox read_box_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_box(in);
}

void write_box(const NoSignalingBox& box, std::ostream& out) {
  const auto& d = box.dims();
  out << "num_settings_A=" << d.settings_a << " num_settings_B=" << d.settings_b
      << " num_outcomes_A=" << d.outcomes_a << " num_outcomes_B=" << d.outcomes_b << '\n';
  for (int a = 0; a < d.settings_a; ++a)
    for (int b = 0; b < d.settings_b; ++b) {
      auto s = box.slice(a, b);
      for (std::size_t i = 0; i < s.size(); ++i) out << (i ? " " : "") << format_double(s[i]);
      out << '\n';
    }
}

// ---------------------------------------------------------------------------

void DetectorModel::validate() const {
  if (!(efficiency >= 0.0 && efficiency <= 1.0))
    throw InvalidArgument("detector efficiency must lie in [0, 1]");
  if (!(jitter_sigma >= 0.0) || !std::isfinite(jitter_sigma))
    throw InvalidArgument("detector jitter_sigma must be >= 0");
  if (!(dark_rate >= 0.0) || !std::isfinite(dark_rate))
    throw InvalidArgument("detector dark_rate must be >= 0");
  if (!std::isfinite(time_offset)) throw InvalidArgument("detector time_offset must be finite");
}

std::pair<ArmRecord, ArmRecord> simulate_lhv(const LhvModel& model, const TrialSchedule& schedule,
                                             unsigned threads) {
  model.validate();
  schedule.validate();
  if (schedule.setting_law_a.size() != static_cast<std::size_t>(model.response_a.num_settings) ||
      schedule.setting_law_b.size() != static_cast<std::size_t>(model.response_b.num_settings))
    throw InvalidArgument("setting laws do not match the model's setting counts");

  std::vector<DetectionEvent> ev_a(schedule.num_trials), ev_b(schedule.num_trials);
  parallel_trials(schedule.num_trials, threads, [&](std::uint64_t k) {
    CounterRng rng(schedule.seed, StreamTag::Trial, k);
    int a = rng.discrete(schedule.setting_law_a);
    int b = rng.discrete(schedule.setting_law_b);
    HiddenVariable lambda = sample_hidden_variable(model.lambda_law, rng);
    double t = static_cast<double>(k) * schedule.trial_period;
    ev_a[k] = {t, a, model.response_a.respond(a, lambda)};
    ev_b[k] = {t, b, model.response_b.respond(b, lambda)};
  });
  // ArmRecord re-validates outcome ranges of the response functions.
  return {ArmRecord(header_for("A", model.response_a.num_settings, model.response_a.num_outcomes),
                    std::move(ev_a)),
          ArmRecord(header_for("B", model.response_b.num_settings, model.response_b.num_outcomes),
                    std::move(ev_b))};
}

std::pair<ArmRecord, ArmRecord> simulate_box(const NoSignalingBox& box,
                                             const TrialSchedule& schedule, unsigned threads) {
  schedule.validate();
  const Dims& d = box.dims();
  if (schedule.setting_law_a.size() != static_cast<std::size_t>(d.settings_a) ||
      schedule.setting_law_b.size() != static_cast<std::size_t>(d.settings_b))
    throw InvalidArgument("setting laws do not match the box's setting counts");

  std::vector<DetectionEvent> ev_a(schedule.num_trials), ev_b(schedule.num_trials);
  parallel_trials(schedule.num_trials, threads, [&](std::uint64_t k) {
    CounterRng rng(schedule.seed, StreamTag::Trial, k);
    int a = rng.discrete(schedule.setting_law_a);
    int b = rng.discrete(schedule.setting_law_b);
    int cell = rng.discrete(box.slice(a, b));
    double t = static_cast<double>(k) * schedule.trial_period;
    ev_a[k] = {t, a, cell / d.outcomes_b};
    ev_b[k] = {t, b, cell % d.outcomes_b};
  });
  return {ArmRecord(header_for("A", d.settings_a, d.outcomes_a), std::move(ev_a)),
          ArmRecord(header_for("B", d.settings_b, d.outcomes_b), std::move(ev_b))};
}

ArmRecord apply_detector(const ArmRecord& record, const DetectorModel& detector,
                         std::uint64_t seed, std::span<const double> dark_setting_law) {
  detector.validate();
  std::vector<double> empirical;
  if (dark_setting_law.empty()) {
    empirical.assign(static_cast<std::size_t>(record.num_settings()), 0.0);
    for (const auto& e : record.events()) empirical[static_cast<std::size_t>(e.setting)] += 1.0;
    double n = static_cast<double>(record.size());
    for (auto& w : empirical) w = n > 0 ? w / n : 1.0 / static_cast<double>(empirical.size());
    dark_setting_law = empirical;
  } else {
    check_law(dark_setting_law, "dark setting law");
    if (dark_setting_law.size() != static_cast<std::size_t>(record.num_settings()))
      throw InvalidArgument("dark setting law size differs from the record's setting count");
  }

  std::vector<DetectionEvent> out;
  out.reserve(record.size());
  const auto& events = record.events();
  for (std::size_t i = 0; i < events.size(); ++i) {
    CounterRng rng(seed, StreamTag::DetectorKeep, i);
    if (!(rng.uniform() < detector.efficiency)) continue;
    DetectionEvent e = events[i];
    double shift = detector.time_offset;
    if (detector.jitter_sigma > 0.0) shift += detector.jitter_sigma * rng.normal();
    e.time += shift;
    out.push_back(e);
  }

  if (detector.dark_rate > 0.0 && !events.empty()) {
    CounterRng rng(seed, StreamTag::DetectorDark, 0);
    const double start = events.front().time;
    const double end = events.back().time;
    const int outcomes = record.num_outcomes();
    for (double t = start + rng.exponential(detector.dark_rate); t <= end;
         t += rng.exponential(detector.dark_rate)) {
      int setting = rng.discrete(dark_setting_law);
      int outcome = std::min(outcomes - 1, static_cast<int>(rng.uniform() * outcomes));
      out.push_back({t, setting, outcome});
    }
  }
  return ArmRecord(record.header(), std::move(out));
}

}  // namespace bellsim
