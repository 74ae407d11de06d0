// SPDX-License-Identifier: Apache-2.0

// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "cergo/cergo.hpp"

using namespace cergo;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string dec(Rational const& q) { return decimal_string(q, 6); }

Outcome ball_formula() {
  for (std::size_t d = 1; d <= 3; ++d) {
    Group const g(GroupSpec::lattice(d, GeneratorChoice::diagonal));
    for (std::uint64_t n = 0; n <= 6; ++n) {
      std::uint64_t expected = 1;
      for (std::size_t i = 0; i < d; ++i) {
        expected *= 2 * n + 1;
      }
      if (g.ball_size(n) != expected) {
        return {false, "d=" + std::to_string(d) + " n=" + std::to_string(n) + " size " +
                           std::to_string(g.ball_size(n))};
      }
    }
  }
  return {true, "d=1..3, n=0..6"};
}

Outcome tempered_output() {
  Group const z(GroupSpec::lattice(1));
  Group const h(GroupSpec::heisenberg());
  std::vector<std::pair<std::string, FoelnerSchedule>> const bases{
      {"Z balls", FoelnerSchedule::balls(z)},
      {"Z dyadic", FoelnerSchedule::dyadic_balls(z)},
      {"H3 balls", FoelnerSchedule::balls(h)}};
  std::string detail;
  for (auto const& [name, base] : bases) {
    auto const r = temper(base, 8);
    auto const check = is_tempered(r.schedule, 8, Rational(2));
    if (!check.holds) {
      return {false, name + " violated at j=" + std::to_string(check.violation.value_or(0))};
    }
    detail += name + " n_8=" + std::to_string(r.indices.back().get_str().size()) + " digits; ";
  }
  return {true, detail};
}

Outcome defect_decay() {
  std::vector<GroupSpec> const specs{GroupSpec::lattice(1), GroupSpec::lattice(2),
                                     GroupSpec::lattice(2, GeneratorChoice::diagonal),
                                     GroupSpec::lattice(3, GeneratorChoice::diagonal),
                                     GroupSpec::heisenberg()};
  std::size_t checked = 0;
  for (auto const& spec : specs) {
    Group const g(spec);
    auto const schedule = FoelnerSchedule::balls(g);
    for (auto gen : g.generators()) {
      Rational prev_left = 3, prev_right = 3;
      for (std::uint64_t n : {2, 4, 8}) {
        auto const b = g.ball(n);
        Rational const l = left_defect(g, b, gen);
        Rational const r = right_defect(g, b, gen);
        Rational const inner(to_integer(b.size()));
        Rational const outer(to_integer(g.ball_size(n + g.word_norm(gen))));
        Rational const bound = (outer - inner) / inner;
        if (!(l < prev_left && r < prev_right && l <= bound && r <= bound)) {
          return {false, spec.name() + " generator " + std::to_string(gen.code) + " n=" +
                             std::to_string(n) + " left " + dec(l) + " right " + dec(r) +
                             " bound " + dec(bound)};
        }
        prev_left = l;
        prev_right = r;
        ++checked;
      }
    }
    (void)schedule;
  }
  return {true, std::to_string(checked) + " (group, generator, n) triples"};
}

Outcome limsup_gap() {
  Group const z(GroupSpec::lattice(1));
  std::vector<std::uint64_t> const ns{20};
  auto const rows = limsup_probe_group(cergo::limsup_counterexample(z), FoelnerSchedule::dyadic_balls(z),
                                       z.encode({1}), ns);
  auto const& r = rows.front();
  Rational const diff = r.shifted_average - r.average;
  bool const ok = r.average >= Rational(45, 100) && r.average <= Rational(55, 100) &&
                  r.shifted_average >= Rational(9, 10) && r.shifted_average <= Rational(105, 100) &&
                  diff > Rational(2, 5);
  return {ok, "avg " + dec(r.average) + " shifted " + dec(r.shifted_average) + " diff " + dec(diff)};
}

Outcome kucera_decay() {
  Group const z(GroupSpec::lattice(1));
  KuceraConfig cfg(FoelnerSchedule::balls(z), BernoulliMeasure(Rational(1, 2)), Rational(9, 10), 3);
  auto const u = EffectivelyOpenSet::finite(
      {Pattern::prefix("1"), Pattern::prefix("01"), Pattern::prefix("001")});
  auto const report = run_tower(u, cfg);
  std::string detail;
  bool ok = report.levels.front().full_measure == Rational(7, 8);
  for (std::size_t k = 1; k < report.levels.size(); ++k) {
    auto const& level = report.levels[k];
    Rational const qk = pow(cfg.q, k);
    ok = ok && level.full_measure < Rational(to_integer(k + 1)) * qk;
    for (auto const& p : level.pieces) {
      ok = ok && p.piece_measure < cfg.q * p.pattern_measure + qk * pow2(-static_cast<long>(p.i));
    }
    detail += "mu(U_" + std::to_string(k) + ")=" + dec(level.full_measure) + " ";
  }
  return {ok && report.all_ok, detail};
}

Rational pairwise_deviation(Pattern const& p, FiniteGroupSet const& f, BernoulliMeasure const& mu,
                            ShiftAction const& action) {
  Rational sum = 0;
  for (auto g : f) {
    for (auto h : f) {
      if (auto both = intersect(action.act_pattern(g, p), action.act_pattern(h, p))) {
        sum += measure(*both, mu);
      }
    }
  }
  Rational const size(to_integer(f.size()));
  Rational const m = measure(p, mu);
  return sum / (size * size) - m * m;
}

Outcome l2_identity() {
  std::mt19937_64 rng(2024);
  std::vector<Group> const groups{Group(GroupSpec::lattice(1)), Group(GroupSpec::lattice(2)),
                                  Group(GroupSpec::heisenberg())};
  BernoulliMeasure const mu(Rational(1, 2));
  std::size_t exact = 0;
  double worst_z = 0;
  for (int t = 0; t < 20; ++t) {
    Group const& g = groups[static_cast<std::size_t>(t) % groups.size()];
    ShiftAction const action(g);
    std::vector<Pattern::Constraint> cs;
    std::set<std::uint64_t> used;
    std::size_t const size = 1 + rng() % 3;
    while (cs.size() < size) {
      std::uint64_t const c = rng() % 10;
      if (used.insert(c).second) {
        cs.emplace_back(c, (rng() & 1U) != 0);
      }
    }
    auto const p = Pattern::from_constraints(cs);
    auto const f = g.ball(1 + rng() % 2);
    Rational const dev = l2_deviation_squared(p, f, mu, action);
    exact += dev == pairwise_deviation(p, f, mu, action) ? 1 : 0;

    // Monte Carlo over 10^5 points drawn on the coordinates the translates touch
    std::vector<Pattern> images;
    std::uint64_t top = 0;
    for (auto h : f) {
      images.push_back(action.act_pattern(h, p));
      for (auto const& [c, b] : images.back().constraints()) {
        top = std::max(top, c + 1);
      }
    }
    int const samples = 100000;
    double m1 = 0, m2 = 0;
    double const mean_target = measure(p, mu).get_d();
    std::vector<bool> bits(top);
    for (int s = 0; s < samples; ++s) {
      for (std::uint64_t c = 0; c < top; ++c) {
        bits[c] = (rng() & 1U) != 0;
      }
      auto const w = PointSource::explicit_bits(bits);
      double hit = 0;
      for (auto const& q : images) {
        hit += q.contains(w) ? 1 : 0;
      }
      double const d = hit / static_cast<double>(f.size()) - mean_target;
      m1 += d * d;
      m2 += d * d * d * d;
    }
    double const mean = m1 / samples;
    double const se = std::sqrt(std::max(0.0, m2 / samples - mean * mean) / samples);
    double const z = se > 0 ? std::abs(mean - dev.get_d()) / se : (mean == dev.get_d() ? 0 : 1e9);
    worst_z = std::max(worst_z, z);
  }
  std::ostringstream s;
  s << exact << "/20 exact, worst Monte Carlo z " << worst_z;
  return {exact == 20 && worst_z <= 3, s.str()};
}

Outcome birkhoff() {
  std::string detail;
  bool ok = true;
  auto run = [&](GroupSpec spec, Rational p, std::uint64_t n) {
    Group const g(spec);
    ShiftAction const action(g);
    BernoulliMeasure const mu(p);
    auto const f = Observable::indicator(Pattern::from_constraints({{0, true}}));
    auto const set = g.ball(n);
    double worst = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Rational const avg = ergodic_average(f, PointSource::seeded(seed, p), set, action, 0, 1);
      worst = std::max(worst, std::abs(Rational(avg - p).get_d()));
    }
    ok = ok && worst < 0.02;
    std::ostringstream s;
    s << spec.name() << " n=" << n << " worst error " << worst << "; ";
    detail += s.str();
  };
  run(GroupSpec::lattice(1), Rational(1, 3), 10000);
  run(GroupSpec::lattice(2), Rational(1, 2), 70);
  return {ok, detail};
}

Outcome search_minimal() {
  Group const z(GroupSpec::lattice(1));
  auto const f = search_two_sided(z, 1, std::uint64_t{1} << 16);
  Integer const index = canonical_index(f);
  // every smaller nonempty index, as a set of integers, against |K + A + K| - |A| <= |A|
  std::uint64_t first = 0;
  for (std::uint64_t m = 1; m <= to_u64(index) && first == 0; ++m) {
    std::set<std::int64_t> a;
    for (std::uint64_t c = 0; c < 64; ++c) {
      if ((m >> c) & 1U) {
        a.insert(encoding::unzigzag(c));
      }
    }
    std::set<std::int64_t> grown;
    for (auto x : a) {
      for (std::int64_t d = -2; d <= 2; ++d) {
        grown.insert(x + d);
      }
    }
    if (grown.size() - a.size() <= a.size()) {
      first = m;
    }
  }
  return {Integer(static_cast<unsigned long>(first)) == index,
          "index " + index.get_str() + ", scan finds " + std::to_string(first)};
}

std::string slurp(std::filesystem::path const& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  std::string const configs = CERGO_CONFIGS;
  auto const dir = std::filesystem::temp_directory_path() / "cergo_acceptance";
  std::filesystem::create_directories(dir);
  std::vector<std::pair<std::string, std::string>> const runs{
      {"birkhoff", "birkhoff_z_balls.json"},   {"birkhoff", "birkhoff_z2_diagonal.json"},
      {"birkhoff", "birkhoff_h3_tempered.json"}, {"growth", "growth_heisenberg.json"},
      {"foelner", "foelner_z_balls.json"},      {"foelner", "foelner_h3_balls.json"},
      {"kucera", "kucera_z.json"},              {"limsup", "limsup_counterexample.json"},
      {"limsup", "limsup_bounded.json"}};
  std::size_t same = 0;
  for (auto const& [cmd, file] : runs) {
    std::string outputs[2];
    for (int rep = 0; rep < 2; ++rep) {
      auto const out = dir / (file + "." + std::to_string(rep));
      std::string const line = std::string(CERGO_CLI) + " " + cmd + " --config " + configs + "/" +
                               file + " > " + out.string() + " 2>/dev/null";
      int const status = std::system(line.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        return {false, cmd + " " + file + " exited with " + std::to_string(WEXITSTATUS(status))};
      }
      outputs[rep] = slurp(out);
    }
    if (outputs[0] != outputs[1] || outputs[0].empty()) {
      return {false, cmd + " " + file + " differs between runs"};
    }
    ++same;
  }
  return {true, std::to_string(same) + " configs byte-identical"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string name;
    double seconds;
    std::function<Outcome()> run;
  };
  std::vector<Criterion> const criteria{
      {1, "ball formula (2n+1)^d", 10, ball_formula},
      {2, "temper output is 2-tempered", 0, tempered_output},
      {3, "Foelner defect decay", 0, defect_decay},
      {4, "limsup counterexample", 0, limsup_gap},
      {5, "Kucera tower decay", 60, kucera_decay},
      {6, "L2 identity cross-check", 0, l2_identity},
      {7, "Birkhoff convergence", 120, birkhoff},
      {8, "minimal two-sided search", 30, search_minimal},
      {9, "CLI determinism", 0, determinism}};
  int failures = 0;
  for (auto const& c : criteria) {
    auto const start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (std::exception const& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    double const secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool const in_time = c.seconds == 0 || secs < c.seconds;
    bool const pass = out.pass && in_time;
    failures += pass ? 0 : 1;
    std::ostringstream t;
    t.precision(3);
    t << std::fixed << secs;
    std::cout << "criterion " << c.id << ' ' << (pass ? "PASS" : "FAIL") << " [" << c.name
              << "] " << t.str() << "s " << out.detail << (in_time ? "" : " (over time limit)")
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
