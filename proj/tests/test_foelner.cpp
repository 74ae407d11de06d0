// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "cergo/foelner.hpp"

using namespace cergo;

namespace {

Group const z1{GroupSpec::lattice(1)};

FiniteGroupSet interval(std::int64_t a, std::int64_t b) {
  std::vector<GroupElement> xs;
  for (std::int64_t x = a; x <= b; ++x) {
    xs.push_back(z1.encode({x}));
  }
  return FiniteGroupSet::from_elements(std::move(xs));
}

std::set<std::int64_t> integers(std::uint64_t m) {
  std::set<std::int64_t> s;
  for (std::uint64_t c = 0; c < 64; ++c) {
    if ((m >> c) & 1U) {
      s.insert(encoding::unzigzag(c));
    }
  }
  return s;
}

}  // namespace

TEST(Defects, IntervalsInZ) {
  for (std::int64_t n = 1; n <= 20; ++n) {
    auto const f = interval(-n, n);
    for (std::int64_t s : {-1, 1}) {
      EXPECT_EQ(left_defect(z1, f, z1.encode({s})), Rational(2, 2 * n + 1));
      EXPECT_EQ(right_defect(z1, f, z1.encode({s})), Rational(2, 2 * n + 1));
    }
    EXPECT_EQ(left_defect(z1, f, z1.encode({3 * n})), Rational(2));
  }
  EXPECT_THROW(left_defect(z1, FiniteGroupSet{}, z1.identity()), domain_error);
}

TEST(Defects, HeisenbergSmallSets) {
  Group const h(GroupSpec::heisenberg());
  auto const f = FiniteGroupSet::from_elements({h.identity(), h.encode({1, 0, 0})});
  auto const y = h.encode({0, 1, 0});
  // y F = {(0,1,0), (1,1,0)} and F y = {(0,1,0), (1,1,1)}
  EXPECT_EQ(left_defect(h, f, y), Rational(2));
  EXPECT_EQ(right_defect(h, f, y), Rational(2));
  auto const g = FiniteGroupSet::from_elements({h.identity(), h.encode({0, 0, 1})});
  EXPECT_EQ(left_defect(h, g, h.encode({0, 0, 1})), Rational(1));
}

TEST(Defects, OrnsteinWeissPreconditions) {
  auto const f = interval(0, 3);
  EXPECT_THROW(ow_defect(z1, f, interval(1, 1)), precondition_error);
  EXPECT_THROW(ow_defect(z1, f, interval(0, 1)), precondition_error);
  EXPECT_EQ(ow_defect(z1, f, interval(-1, 1)), Rational(1));
}

TEST(Search, WindowContainsIdentityAndIsSymmetric) {
  for (std::uint64_t n = 1; n < 6; ++n) {
    auto const k = search_window(z1, n);
    EXPECT_TRUE(k.contains(z1.identity()));
    EXPECT_TRUE(is_symmetric(z1, k));
  }
  EXPECT_EQ(search_window(z1, 1), interval(-1, 1));
}

TEST(Search, FirstSolutionInZIsMinimal) {
  auto const f = search_two_sided(z1, 1, std::uint64_t{1} << 16);
  EXPECT_EQ(canonical_index(f), Integer(15));
  EXPECT_EQ(f, FiniteGroupSet::from_codes({0, 1, 2, 3}));
  // independent scan with integer sets: |K + F + K| - |F| <= |F| with K = {-1, 0, 1}
  std::uint64_t first = 0;
  for (std::uint64_t m = 1; m <= 15 && first == 0; ++m) {
    auto const s = integers(m);
    std::set<std::int64_t> grown;
    for (auto x : s) {
      for (std::int64_t d = -2; d <= 2; ++d) {
        grown.insert(x + d);
      }
    }
    if (grown.size() - s.size() <= s.size()) {
      first = m;
    }
  }
  EXPECT_EQ(first, 15u);
}

TEST(Search, ParallelAgreesWithSerial) {
  EXPECT_EQ(search_two_sided(z1, 1, 1 << 12, 3), search_two_sided(z1, 1, 1 << 12, 1));
}

TEST(Search, ExhaustionIsReported) {
  EXPECT_THROW(search_two_sided(z1, 1, 14), search_exhausted);
  EXPECT_THROW(search_two_sided(z1, 0), domain_error);
}

TEST(Schedule, BallsDyadicExplicit) {
  auto const balls = FoelnerSchedule::balls(z1);
  EXPECT_EQ(balls.set(4), interval(-4, 4));
  EXPECT_TRUE(balls.is_balls());
  EXPECT_TRUE(balls.two_sided());
  auto const dyadic = FoelnerSchedule::dyadic_balls(z1);
  EXPECT_EQ(dyadic.set(3), interval(-8, 8));
  EXPECT_FALSE(dyadic.is_balls());
  EXPECT_EQ(dyadic.cardinality(Integer(100)), Integer(2) * pow2(100).get_num() + 1);
  auto const ex = FoelnerSchedule::explicit_sets(z1, {interval(0, 0), interval(0, 1)});
  EXPECT_EQ(ex.length(), std::optional<std::uint64_t>(2));
  EXPECT_THROW(ex.set(3), precondition_error);
  EXPECT_THROW(ex.set(0), domain_error);
  EXPECT_THROW(FoelnerSchedule::explicit_sets(z1, {FiniteGroupSet{}}), validation_error);
  EXPECT_THROW(FoelnerSchedule::tempered(balls, {Integer(2), Integer(2)}), precondition_error);
}

TEST(Temper, ZBallsFirstIndices) {
  auto const r = temper(FoelnerSchedule::balls(z1), 5);
  std::vector<Integer> const expected{1, 3, 21, 903, 1631721};
  EXPECT_EQ(r.indices, expected);
  EXPECT_EQ(r.trace.front().n, Integer(1));
  // each chosen index satisfies |F_m (+) F~^{-1} F_m| |F~| <= |F_m| and is the first such
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    auto const& s = r.trace[i];
    EXPECT_LE(s.symmetric_difference * s.union_size, s.set_size);
  }
}

TEST(Temper, LiteralScanAgreesWithClosedForm) {
  std::vector<FiniteGroupSet> sets;
  for (std::int64_t n = 1; n <= 40; ++n) {
    sets.push_back(interval(-n, n));
  }
  auto const literal = temper(FoelnerSchedule::explicit_sets(z1, sets), 3);
  auto const radial = temper(FoelnerSchedule::balls(z1), 3);
  EXPECT_EQ(literal.indices, radial.indices);
  for (std::size_t i = 0; i < literal.trace.size(); ++i) {
    EXPECT_EQ(literal.trace[i].symmetric_difference, radial.trace[i].symmetric_difference);
    EXPECT_EQ(literal.trace[i].set_size, radial.trace[i].set_size);
  }
}

TEST(Temper, OutputIsTwoTempered) {
  Group const h(GroupSpec::heisenberg());
  for (auto const& base : {FoelnerSchedule::balls(z1), FoelnerSchedule::dyadic_balls(z1),
                           FoelnerSchedule::dyadic_balls(h)}) {
    auto const r = temper(base, 6);
    auto const check = is_tempered(r.schedule, 6, Rational(2));
    EXPECT_TRUE(check.holds) << base.describe();
    for (std::size_t i = 1; i < r.indices.size(); ++i) {
      EXPECT_GT(r.indices[i], r.indices[i - 1]);
      EXPECT_GT(r.indices[i], Integer(static_cast<unsigned long>(i + 1)));
    }
  }
}

TEST(Tempered, LiteralUnionOracle) {
  // |U_{i<j} F_i^{-1} F_j| computed on integer sets
  std::vector<std::set<std::int64_t>> sets{{0}, {-1, 0, 1}, {-3, -2, -1, 0, 1, 2, 3}, {4, 5}};
  std::vector<FiniteGroupSet> fs;
  for (auto const& s : sets) {
    std::vector<GroupElement> xs;
    for (auto x : s) {
      xs.push_back(z1.encode({x}));
    }
    fs.push_back(FiniteGroupSet::from_elements(xs));
  }
  auto const check = is_tempered(FoelnerSchedule::explicit_sets(z1, fs), 4, Rational(2));
  ASSERT_EQ(check.rows.size(), 3u);
  for (std::size_t j = 1; j < sets.size(); ++j) {
    std::set<std::int64_t> u;
    for (std::size_t i = 0; i < j; ++i) {
      for (auto a : sets[i]) {
        for (auto b : sets[j]) {
          u.insert(b - a);
        }
      }
    }
    EXPECT_EQ(check.rows[j - 1].union_size, Integer(static_cast<unsigned long>(u.size())));
  }
  // j = 4: {4,5} - {-3..3} = {1..8} has 8 elements >= 2 * 2
  EXPECT_FALSE(check.holds);
  EXPECT_EQ(check.violation, std::optional<std::uint64_t>(4));
}

TEST(Tempered, RadialAgreesWithLiteral) {
  auto const r = temper(FoelnerSchedule::balls(z1), 3);  // 1, 3, 21
  auto const radial = is_tempered(r.schedule, 3, Rational(2));
  auto const literal = is_tempered(
      FoelnerSchedule::explicit_sets(z1, {interval(-1, 1), interval(-3, 3), interval(-21, 21)}), 3,
      Rational(2));
  ASSERT_EQ(radial.rows.size(), literal.rows.size());
  for (std::size_t i = 0; i < radial.rows.size(); ++i) {
    EXPECT_EQ(radial.rows[i].union_size, literal.rows[i].union_size);
  }
}

TEST(Verify, BallDefectsBelowShellBound) {
  for (auto spec : {GroupSpec::lattice(1), GroupSpec::lattice(2),
                    GroupSpec::lattice(2, GeneratorChoice::diagonal), GroupSpec::heisenberg()}) {
    Group const g(spec);
    auto const s = FoelnerSchedule::balls(g);
    for (auto const& r : verify_foelner(s, g.generators(), 6)) {
      Rational const inner(to_integer(g.ball_size(r.n)));
      Rational const outer(to_integer(g.ball_size(r.n + 1)));
      Rational const bound = (outer - inner) / inner;
      EXPECT_LE(r.left_defect, bound);
      EXPECT_LE(r.right_defect, bound);
    }
  }
}
