// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cergo/kucera.hpp"

using namespace cergo;

namespace {

Group const z1{GroupSpec::lattice(1)};
ShiftAction const shift{z1};
BernoulliMeasure const half{Rational(1, 2)};

Pattern single(std::int64_t x, bool b = true) {
  return Pattern::from_constraints({{z1.encode({x}).code, b}});
}

// (1/|F|^2) sum over pairs g, h in F of mu(g<I> n h<I>) - mu(I)^2
Rational pairwise_deviation(Pattern const& p, FiniteGroupSet const& f, BernoulliMeasure const& mu,
                            ShiftAction const& action) {
  Rational sum = 0;
  for (auto g : f) {
    for (auto h : f) {
      auto const both = intersect(action.act_pattern(g, p), action.act_pattern(h, p));
      if (both) {
        sum += measure(*both, mu);
      }
    }
  }
  Rational const size(to_integer(f.size()));
  Rational const m = measure(p, mu);
  return sum / (size * size) - m * m;
}

Pattern random_pattern(std::mt19937_64& rng, std::uint64_t coords, std::size_t size) {
  std::vector<Pattern::Constraint> cs;
  for (std::size_t i = 0; i < size; ++i) {
    std::uint64_t const c = rng() % coords;
    bool clash = false;
    for (auto const& [d, b] : cs) {
      clash = clash || d == c;
    }
    if (!clash) {
      cs.emplace_back(c, (rng() & 1U) != 0);
    }
  }
  return Pattern::from_constraints(std::move(cs));
}

// The shift, but each image is listed as pieces refined on coordinates past
// the support: either the four cells of two fresh bits, or an infinite
// geometric sequence "first one at fresh coordinate j".
class SplitAction final : public CantorAction {
 public:
  enum class Mode { four, geometric, truncated };
  explicit SplitAction(Mode mode) : mode_(mode) {}
  Group const& group() const override { return z1; }
  std::optional<Pattern> image_piece(GroupElement g, Pattern const& p,
                                     std::size_t j) const override {
    Pattern const image = shift.act_pattern(g, p);
    std::uint64_t fresh = 0;
    for (auto const& [c, b] : image.constraints()) {
      fresh = std::max(fresh, c + 1);
    }
    auto cs = image.constraints();
    switch (mode_) {
      case Mode::four:
      case Mode::truncated:
        if (j >= (mode_ == Mode::four ? 4u : 2u)) {
          return std::nullopt;
        }
        cs.emplace_back(fresh, (j & 1U) != 0);
        cs.emplace_back(fresh + 1, (j & 2U) != 0);
        break;
      case Mode::geometric:
        for (std::size_t t = 0; t < j; ++t) {
          cs.emplace_back(fresh + t, false);
        }
        cs.emplace_back(fresh + j, true);
        break;
    }
    return Pattern::from_constraints(std::move(cs));
  }

 private:
  Mode mode_;
};

// exact value rounded down to a multiple of the precision
class RoundingOracle final : public MeasureOracle {
 public:
  explicit RoundingOracle(BernoulliMeasure mu) : mu_(std::move(mu)) {}
  Rational approximate(std::span<Pattern const> patterns,
                       Rational const& precision) const override {
    Rational const exact = measure_union(patterns, mu_);
    Rational const steps = exact / precision;
    Integer const whole = steps.get_num() / steps.get_den();
    return Rational(whole) * precision;
  }

 private:
  BernoulliMeasure mu_;
};

KuceraConfig z_config(Rational q = Rational(9, 10)) {
  return KuceraConfig(FoelnerSchedule::balls(z1), half, std::move(q), 3);
}

EffectivelyOpenSet three_ones() {
  return EffectivelyOpenSet::finite({single(0), single(-1), single(1)});
}

}  // namespace

TEST(Deviation, SmallCases) {
  auto const p = single(0);
  EXPECT_EQ(l2_deviation_squared(p, FiniteGroupSet::from_elements({z1.identity()}), half, shift),
            Rational(1, 4));
  EXPECT_EQ(l2_deviation_squared(Pattern{}, z1.ball(3), half, shift), Rational(0));
  // 11 disjoint translates: 11 (1/2 - 1/4) / 121
  EXPECT_EQ(l2_deviation_squared(p, z1.ball(5), half, shift), Rational(1, 44));
  EXPECT_THROW(l2_deviation_squared(p, FiniteGroupSet{}, half, shift), domain_error);
}

TEST(Deviation, MatchesPairwiseSum) {
  std::mt19937_64 rng(11);
  for (auto spec : {GroupSpec::lattice(1), GroupSpec::lattice(2), GroupSpec::heisenberg()}) {
    Group const g(spec);
    ShiftAction const action(g);
    BernoulliMeasure const mu(Rational(1, 3));
    for (int t = 0; t < 20; ++t) {
      auto const p = random_pattern(rng, 12, 1 + rng() % 4);
      auto const f = g.ball(1 + rng() % 2);
      EXPECT_EQ(l2_deviation_squared(p, f, mu, action), pairwise_deviation(p, f, mu, action));
    }
  }
}

TEST(Deviation, MonteCarlo) {
  // E[(A(w) - mu)^2] with A(w) the fraction of h in F with w in h<I>
  auto const p = Pattern::from_constraints({{0, true}, {1, false}});
  auto const f = z1.ball(2);
  std::vector<Pattern> images;
  for (auto h : f) {
    images.push_back(shift.act_pattern(h, p));
  }
  double const mu = 0.25;
  std::mt19937_64 rng(5);
  int const samples = 100000;
  double sum = 0, sum2 = 0;
  for (int s = 0; s < samples; ++s) {
    std::uint64_t const bits = rng();
    auto const w = PointSource::explicit_bits(
        std::vector<bool>{(bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0, (bits & 8) != 0,
                          (bits & 16) != 0, (bits & 32) != 0, (bits & 64) != 0,
                          (bits & 128) != 0});
    double hit = 0;
    for (auto const& q : images) {
      hit += q.contains(w) ? 1 : 0;
    }
    double const d = hit / static_cast<double>(f.size()) - mu;
    sum += d * d;
    sum2 += d * d * d * d;
  }
  double const mean = sum / samples;
  double const se = std::sqrt((sum2 / samples - mean * mean) / samples);
  double const exact = l2_deviation_squared(p, f, half, shift).get_d();
  EXPECT_NEAR(mean, exact, 3 * se);
}

TEST(FindN, Examples) {
  auto const cfg = z_config(Rational(4, 5));
  EXPECT_EQ(find_n(1, 1, Pattern{}, cfg).n, 1u);
  // target (16/25)(1/4)/4 = 1/25, deviation 1/(4(2n+1)): first n with 2n+1 > 25/4 is 3
  auto const r = find_n(1, 1, single(0), cfg);
  EXPECT_EQ(r.n, 3u);
  EXPECT_EQ(r.target_squared, Rational(1, 25));
  EXPECT_EQ(r.deviation_squared, Rational(1, 28));
}

TEST(FindN, IsMinimal) {
  std::mt19937_64 rng(12);
  auto const cfg = z_config();
  for (int t = 0; t < 20; ++t) {
    auto const p = random_pattern(rng, 8, 1 + rng() % 3);
    std::size_t const i = 1 + rng() % 2;
    auto const r = find_n(i, 1, p, cfg);
    Rational const target = pow(cfg.q, 2) * Rational(1, 1 << (2 * i)) / 4;
    EXPECT_LT(pairwise_deviation(p, z1.ball(r.n), half, shift), target);
    for (std::uint64_t n = 1; n < r.n; ++n) {
      EXPECT_GE(pairwise_deviation(p, z1.ball(n), half, shift), target);
    }
  }
}

TEST(FindN, HorizonIsADeskLimit) {
  auto cfg = z_config();
  cfg.horizon = 1;
  EXPECT_THROW(find_n(3, 2, single(0), cfg), horizon_exceeded);
}

TEST(Delta, ShiftGivesTheImage) {
  ExactBernoulliOracle const oracle(half);
  auto const g = z1.encode({4});
  auto const d = build_delta(g, 1, 1, single(0), shift, oracle, half, Rational(9, 10));
  ASSERT_EQ(d.patterns.size(), 1u);
  EXPECT_EQ(d.patterns[0], single(4));
  EXPECT_EQ(d.defect, Rational(0));
}

TEST(Delta, SplitImages) {
  ExactBernoulliOracle const oracle(half);
  auto const g = z1.encode({-2});
  auto const p = Pattern::from_constraints({{0, true}, {2, false}});
  Rational const q(9, 10);
  Rational const bound = pow(q, 2) / 16 / 64;

  auto const four = build_delta(g, 2, 1, p, SplitAction(SplitAction::Mode::four), oracle, half, q);
  EXPECT_EQ(four.patterns.size(), 4u);
  EXPECT_EQ(four.defect, Rational(0));
  EXPECT_EQ(four.defect_bound, bound);

  auto const geo =
      build_delta(g, 2, 1, p, SplitAction(SplitAction::Mode::geometric), oracle, half, q);
  // pieces carry mu(I) 2^{-j-1}; stop once mu(I)(1 - 2^{-m}) > mu(I) - bound / 2 with mu(I) = 1/4
  std::size_t m = 1;
  while (Rational(1, 4) * (1 - pow2(-static_cast<long>(m))) <= Rational(1, 4) - bound / 2) {
    ++m;
  }
  EXPECT_EQ(geo.patterns.size(), m);
  EXPECT_EQ(geo.defect, Rational(1, 4) * pow2(-static_cast<long>(m)));
  EXPECT_LT(geo.defect, geo.defect_bound);

  RoundingOracle const rounding(half);
  auto const rounded =
      build_delta(g, 2, 1, p, SplitAction(SplitAction::Mode::geometric), rounding, half, q);
  EXPECT_LT(rounded.defect, rounded.defect_bound);

  EXPECT_THROW(
      build_delta(g, 2, 1, p, SplitAction(SplitAction::Mode::truncated), oracle, half, q),
      enumeration_too_short);
}

TEST(Delta, SearchAgreesWithDirectDeviation) {
  ExactBernoulliOracle const oracle(half);
  auto const cfg = z_config(Rational(4, 5));
  for (auto const& p : {single(0), Pattern::from_constraints({{0, true}, {1, true}})}) {
    auto const direct = find_n(1, 1, p, cfg);
    auto const delta = find_n_delta(1, 1, p, cfg, shift, oracle);
    EXPECT_EQ(delta.n, direct.n);
    EXPECT_EQ(delta.deviation_squared, direct.deviation_squared);
  }
}

TEST(Tower, DecaysWithinBounds) {
  auto const report = run_tower(three_ones(), z_config());
  ASSERT_EQ(report.levels.size(), 4u);
  EXPECT_EQ(report.levels[0].full_measure, Rational(7, 8));
  EXPECT_TRUE(report.all_ok);
  Rational const q(9, 10);
  for (std::uint64_t k = 1; k < report.levels.size(); ++k) {
    auto const& level = report.levels[k];
    Rational const qk = pow(q, k);
    EXPECT_LT(level.full_measure, Rational(to_integer(k + 1)) * qk);
    EXPECT_LT(level.full_measure, q * report.levels[k - 1].measure_upper + qk);
    Rational sum = 0;
    for (auto const& piece : level.pieces) {
      EXPECT_LT(piece.piece_measure,
                q * piece.pattern_measure + qk * pow2(-static_cast<long>(piece.i)));
      EXPECT_LE(piece.piece_measure, piece.pattern_measure);
      sum += piece.piece_measure;
    }
    EXPECT_EQ(sum, level.full_measure);
  }
}

TEST(Tower, LevelsRefineAndCarryExactMeasure) {
  auto const report = run_tower(three_ones(), z_config());
  for (std::size_t k = 0; k < report.levels.size(); ++k) {
    auto const& level = report.levels[k];
    EXPECT_LE(level.patterns.size(), default_truncation);
    EXPECT_EQ(level.measure_upper, measure_union(level.patterns, half));
    EXPECT_LE(level.measure_upper, level.full_measure);
    if (!level.truncated) {
      EXPECT_EQ(level.measure_upper, level.full_measure);
    }
    for (std::size_t a = 0; a < level.patterns.size(); ++a) {
      for (std::size_t b = 0; b < a; ++b) {
        EXPECT_FALSE(intersect(level.patterns[a], level.patterns[b]));
      }
      if (k > 0) {
        bool inside = false;
        for (auto const& coarse : report.levels[k - 1].patterns) {
          inside = inside || level.patterns[a].refines(coarse);
        }
        EXPECT_TRUE(inside);
      }
    }
  }
}

TEST(Tower, TestLevels) {
  auto const report = run_tower(three_ones(), z_config());
  ASSERT_FALSE(report.test_levels.empty());
  for (auto const& [m, k] : report.test_levels) {
    Rational const threshold = pow2(-static_cast<long>(m));
    EXPECT_LT(report.levels[k].full_measure, threshold);
    for (std::uint64_t j = 0; j < k; ++j) {
      EXPECT_GE(report.levels[j].full_measure, threshold);
    }
  }
}

TEST(Tower, WorkersDoNotChangeTheResult) {
  auto cfg = z_config();
  auto const serial = run_tower(three_ones(), cfg);
  cfg.workers = 3;
  auto const parallel = run_tower(three_ones(), cfg);
  ASSERT_EQ(serial.levels.size(), parallel.levels.size());
  for (std::size_t k = 0; k < serial.levels.size(); ++k) {
    EXPECT_EQ(serial.levels[k].full_measure, parallel.levels[k].full_measure);
    EXPECT_EQ(serial.levels[k].patterns, parallel.levels[k].patterns);
  }
}

TEST(Tower, EdgeCases) {
  auto const empty = run_tower(EffectivelyOpenSet::finite({}), z_config());
  for (auto const& level : empty.levels) {
    EXPECT_EQ(level.full_measure, Rational(0));
    EXPECT_TRUE(level.patterns.empty());
  }
  EXPECT_TRUE(empty.all_ok);

  auto cfg = z_config();
  cfg.depth = 0;
  EXPECT_EQ(run_tower(three_ones(), cfg).levels.size(), 1u);

  // mu = 15/16 is not below q
  auto const big = EffectivelyOpenSet::finite({single(0), single(1), single(-1), single(2)});
  EXPECT_THROW(run_tower(big, z_config()), validation_error);
  EXPECT_THROW(z_config(Rational(1)), validation_error);
  EXPECT_THROW(z_config(Rational(0)), validation_error);
}
