// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fail.
#include "bellsim/coincidence.hpp"
#include "bellsim/feasibility.hpp"
#include "bellsim/models.hpp"
#include "bellsim/pipeline.hpp"
#include "bellsim/statistics.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace bellsim;

namespace {

constexpr double kPi = std::numbers::pi;
const Dims kBinary{2, 2, 2, 2};

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  failures += !o.pass;
  std::printf("%s  %d  %s  [%s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

TrialSchedule schedule(std::uint64_t n, std::uint64_t seed) {
  TrialSchedule s;
  s.num_trials = n;
  s.trial_period = 1e-6;
  s.seed = seed;
  return s;
}

SummaryTable tabulate_run(const std::pair<ArmRecord, ArmRecord>& arms, double tau) {
  return tabulate(match_events(arms.first, arms.second, tau));
}

std::vector<double> correlator_box(const std::array<double, 4>& e) {
  std::vector<double> t(16);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int A = 0; A < 2; ++A)
        for (int B = 0; B < 2; ++B)
          t[kBinary.index(a, b, A, B)] = (1 + ((A ^ B) ? -1 : 1) * e[a * 2 + b]) / 4;
  return t;
}

bool sound(const MarginalProblem& problem, const FeasibilityResult& r, bool& feasible) {
  const double tol = problem.tolerance;
  feasible = r.status == FeasibilityStatus::Feasible;
  if (feasible) {
    if (!r.certificate) return false;
    auto replay = r.certificate->marginals();
    for (std::size_t c = 0; c < replay.size(); ++c)
      if (!(std::abs(replay[c] - r.marginals[c]) <= 10 * tol)) return false;
    return true;
  }
  if (r.status != FeasibilityStatus::Infeasible || !r.witness) return false;
  return r.witness->evaluate(r.marginals) > enumerate_deterministic_bound(*r.witness);
}

std::string strip_timestamp(const std::string& manifest) {
  std::istringstream in(manifest);
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("created_at=", 0) != 0) out += line + "\n";
  return out;
}

}  // namespace

int main() {
  criterion(1, "singlet CHSH estimate within 0.01 of 2*sqrt(2), N=1e6, under 10 s", [] {
    auto start = std::chrono::steady_clock::now();
    std::vector<double> ta{0.0, kPi / 2}, tb{kPi / 4, 3 * kPi / 4};
    auto s = schedule(1000000, 1);
    auto table = tabulate_run(simulate_box(singlet_box(ta, tb), s), s.trial_period / 4);
    auto result = chsh(conditionals(table));
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    double err = std::abs(result.value - 2 * std::sqrt(2.0));
    return Outcome{err <= 0.01 && seconds <= 10.0,
                   fmt("S=%.5f |S-2sqrt2|=%.5f time=%.2fs", result.value, err, seconds)};
  });

  criterion(2, "deterministic strategies reach exactly 2; 50 random LHV models stay within 2+5 sigma",
            [] {
              double best = 0.0;
              for (int s = 0; s < 16; ++s) {
                int a0 = s & 1 ? -1 : 1, a1 = s & 2 ? -1 : 1, b0 = s & 4 ? -1 : 1, b1 = s & 8 ? -1 : 1;
                best = std::max(best, chsh(std::array<double, 4>{double(a0 * b0), double(a0 * b1),
                                                                 double(a1 * b0), double(a1 * b1)})
                                          .value);
              }
              std::mt19937_64 gen(2);
              std::uniform_real_distribution<double> u(0.01, 1.0);
              int violations = 0;
              double worst = -1e9;
              for (int m = 0; m < 50; ++m) {
                std::size_t k = 1 + gen() % 8;
                std::vector<double> w(k);
                double total = 0.0;
                for (auto& x : w) total += (x = u(gen));
                for (auto& x : w) x /= total;
                w.back() = 1.0;
                for (std::size_t i = 0; i + 1 < k; ++i) w.back() -= w[i];
                std::vector<std::vector<int>> ta(2, std::vector<int>(k)), tb = ta;
                for (auto* t : {&ta, &tb})
                  for (auto& row : *t)
                    for (auto& o : row) o = static_cast<int>(gen() & 1);
                auto model = table_model(w, ta, tb);
                auto s = schedule(100000, 100 + m);
                auto r = chsh(conditionals(tabulate_run(simulate_lhv(model, s), s.trial_period / 4)));
                worst = std::max(worst, (r.value - 2.0) / r.sigma);
                violations += r.value > 2.0 + 5.0 * r.sigma;
              }
              return Outcome{best == 2.0 && violations == 0,
                             fmt("max deterministic S=%.17g, violations=%d/50, worst (S-2)/sigma=%.2f",
                                 best, violations, worst)};
            });

  std::mt19937_64 boxes_gen(3);
  std::vector<MarginalProblem> unbiased;
  {
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 1000; ++i) {
      MarginalProblem p;
      p.dims = kBinary;
      p.marginals = correlator_box({u(boxes_gen), u(boxes_gen), u(boxes_gen), u(boxes_gen)});
      unbiased.push_back(std::move(p));
    }
  }
  std::vector<FeasibilityResult> verdicts;

  criterion(3, "Fine's criterion and the LP agree on 1000 random unbiased binary boxes", [&] {
    int disagreements = 0, exists = 0;
    for (const auto& p : unbiased) {
      verdicts.push_back(solve_joint_feasibility(p));
      bool fine = fine_check(p) == FineVerdict::JointExists;
      exists += fine;
      disagreements += fine != (verdicts.back().status == FeasibilityStatus::Feasible);
    }
    return Outcome{disagreements == 0,
                   fmt("disagreements=%d, joint exists in %d/1000", disagreements, exists)};
  });

  criterion(4, "every feasible verdict replays within 10*tol; every witness beats its bound", [&] {
    int feasible_ok = 0, feasible_n = 0, witness_ok = 0, witness_n = 0;
    std::vector<MarginalProblem> problems = unbiased;
    std::vector<FeasibilityResult> results = verdicts;
    // Biased singles and larger alphabets as well.
    std::uniform_real_distribution<double> u(0, 1);
    auto pr = pr_box();
    for (int i = 0; i < 200; ++i) {
      Dims d{2 + static_cast<int>(boxes_gen() % 2), 2, 2 + static_cast<int>(boxes_gen() % 2), 2};
      std::vector<std::vector<double>> ua(d.settings_a, std::vector<double>(d.outcomes_a)),
          vb(d.settings_b, std::vector<double>(d.outcomes_b));
      for (auto* m : {&ua, &vb})
        for (auto& row : *m) {
          double t = 0.0;
          for (auto& x : row) t += (x = u(boxes_gen));
          for (auto& x : row) x /= t;
        }
      auto product = product_box(ua, vb);
      std::vector<double> m = product.table();
      double w = u(boxes_gen);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          for (int A = 0; A < d.outcomes_a; ++A)
            for (int B = 0; B < d.outcomes_b; ++B) {
              double prv = (A < 2 && B < 2) ? pr(a, b, A, B) : 0.0;
              auto c = d.index(a, b, A, B);
              m[c] = w * prv + (1 - w) * m[c];
            }
      for (int a = 2; a < d.settings_a; ++a)
        for (int b = 0; b < 2; ++b)
          for (int A = 0; A < d.outcomes_a; ++A)
            for (int B = 0; B < d.outcomes_b; ++B) {
              // Extra setting: independent of the PR part; the b-marginal must match.
              double pb = 0.0;
              for (int A2 = 0; A2 < d.outcomes_a; ++A2) pb += m[d.index(0, b, A2, B)];
              m[d.index(a, b, A, B)] = ua[a][A] * pb;
            }
      MarginalProblem p;
      p.dims = d;
      p.marginals = m;
      problems.push_back(p);
      results.push_back(solve_joint_feasibility(p));
    }
    for (std::size_t i = 0; i < problems.size(); ++i) {
      bool feasible = false;
      bool ok = sound(problems[i], results[i], feasible);
      (feasible ? feasible_n : witness_n)++;
      (feasible ? feasible_ok : witness_ok) += ok;
    }
    return Outcome{feasible_ok == feasible_n && witness_ok == witness_n && witness_n > 0 && feasible_n > 0,
                   fmt("feasible replayed %d/%d, witnesses valid %d/%d", feasible_ok, feasible_n,
                       witness_ok, witness_n)};
  });

  criterion(5, "simulated PR box (N=1e6) is infeasible with witness within 0.02 of 4, bound 2", [] {
    auto s = schedule(1000000, 5);
    auto table = tabulate_run(simulate_box(pr_box(), s), s.trial_period / 4);
    auto problem = MarginalProblem::from_conditionals(conditionals(table), 1e-9, true);
    auto r = solve_joint_feasibility(problem);
    bool ok = r.status == FeasibilityStatus::Infeasible && std::abs(r.witness_value - 4.0) <= 0.02 &&
              std::abs(r.classical_bound - 2.0) <= 1e-9;
    return Outcome{ok, fmt("status=%s witness=%.5f bound=%.5f", std::string(to_string(r.status)).c_str(),
                           r.witness_value, r.classical_bound)};
  });

  criterion(6, "box data passes no-signaling at z=5 (<=1 of 20 seeds fails); signaling table max|z|>20",
            [] {
              std::vector<double> ta{0.0, kPi / 2}, tb{kPi / 4, 3 * kPi / 4};
              auto box = singlet_box(ta, tb);
              int failed = 0;
              double worst = 0.0;
              for (int seed = 0; seed < 20; ++seed) {
                auto s = schedule(200000, 600 + seed);
                auto report = no_signaling_check(tabulate_run(simulate_box(box, s), s.trial_period / 4), 5.0);
                failed += !report.pass;
                worst = std::max(worst, report.max_abs_z);
              }
              SummaryTable t(kBinary);
              const std::uint64_t n = 10000;
              t.add(0, 0, 0, 0, 9 * n / 10);
              t.add(0, 0, 1, 1, n / 10);
              t.add(0, 1, 0, 0, n / 10);
              t.add(0, 1, 1, 1, 9 * n / 10);
              for (int b = 0; b < 2; ++b)
                for (int A = 0; A < 2; ++A)
                  for (int B = 0; B < 2; ++B) t.add(1, b, A, B, n / 4);
              auto bad = no_signaling_check(t, 5.0);
              return Outcome{failed <= 1 && !bad.pass && bad.max_abs_z > 20.0,
                             fmt("seeds failing=%d/20 (worst |z|=%.2f), signaling max|z|=%.1f", failed,
                                 worst, bad.max_abs_z)};
            });

  criterion(7, "matching recovers the trial pairing exactly (no jitter) and >=99.9% with jitter tau/10", [] {
    auto s = schedule(200000, 7);
    auto arms = simulate_box(pr_box(), s);
    bool exact = true;
    for (double frac : {1e-6, 0.1, 0.25, 0.4, 0.499999}) {
      auto ps = match_events(arms.first, arms.second, frac * s.trial_period);
      exact = exact && ps.pairs.size() == s.num_trials;
      for (const auto& p : ps.pairs) exact = exact && p.index_a == p.index_b;
    }
    const double tau = s.trial_period / 4;
    DetectorModel d;
    d.jitter_sigma = tau / 10;
    auto ja = apply_detector(arms.first, d, 71), jb = apply_detector(arms.second, d, 72);
    auto ps = match_events(ja, jb, tau);
    std::size_t correct = 0;
    for (const auto& p : ps.pairs)
      correct += std::lround(p.time_a / s.trial_period) == std::lround(p.time_b / s.trial_period);
    double rate = static_cast<double>(correct) / static_cast<double>(s.num_trials);
    return Outcome{exact && rate >= 0.999, fmt("exact=%s, jittered recovery=%.5f", exact ? "yes" : "no", rate)};
  });

  criterion(8, "identical config and seed give byte-identical outputs apart from the timestamp", [] {
    auto config = PipelineConfig::from_json(Json::parse(R"({
      "model": {"type": "singlet", "angles_A": [0, 1.5707963267948966],
                "angles_B": [0.7853981633974483, 2.356194490192345]},
      "schedule": {"num_trials": 200000, "trial_period": 1e-6, "seed": 8},
      "detectors": {"A": {"efficiency": 0.8, "jitter_sigma": 2e-8, "dark_rate": 2000},
                    "B": {"efficiency": 0.9, "jitter_sigma": 1e-8, "dark_rate": 500}},
      "matching": {"tau": 2.5e-7},
      "analysis": {"project_singles": true}})"));
    auto first = run_pipeline(config, 1);
    auto second = run_pipeline(config, 1);
    auto threaded = run_pipeline(config, 8);
    bool same = first == second && first == threaded;
    auto m1 = strip_timestamp(make_manifest("run", config.to_json(), config.schedule.seed));
    auto m2 = strip_timestamp(make_manifest("run", config.to_json(), config.schedule.seed));
    same = same && m1 == m2;
    return Outcome{same, fmt("%zu artifacts compared across reruns and thread counts", first.size() + 1)};
  });

  std::printf("%s\n", failures == 0 ? "ALL PASS" : "SOME CRITERIA FAILED");
  return failures == 0 ? 0 : 1;
}
