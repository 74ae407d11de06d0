// SPDX-License-Identifier: Apache-2.0

// The Kucera tower for a shift-invariant Bernoulli measure.  From an
// effectively open U with mu(U) < q < 1,
//
//   U_k = union over pieces I_i of U_{k-1} of
//         I_i  n  (intersection over g in F_{n(i,k)} of g^{-1} U_{k-1})
//
// where n(i,k) is the first index whose Foelner set makes the L2 deviation of
// the averaged indicator of I_i smaller than q^k 2^{-i} / 2.  Every level is
// kept as a decision diagram, so its measure is exact; the list of pieces
// carried to the next level is the heaviest `truncation` cylinders.  Each
// piece then satisfies mu < q mu(I_i) + q^k 2^{-i}, and mu(U_k) < (k+1) q^k.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cergo/bdd.hpp"
#include "cergo/cantor.hpp"
#include "cergo/error.hpp"
#include "cergo/foelner.hpp"
#include "cergo/parallel.hpp"
#include "cergo/rational.hpp"

namespace cergo {

inline constexpr std::uint64_t default_find_horizon = 128;
inline constexpr std::size_t default_truncation = 4;

struct KuceraConfig {
  KuceraConfig(FoelnerSchedule schedule_, BernoulliMeasure measure_, Rational q_,
               std::uint64_t depth_ = 1)
      : schedule(std::move(schedule_)),
        measure(std::move(measure_)),
        q(std::move(q_)),
        depth(depth_) {
    if (q <= 0 || q >= 1) {
      throw validation_error("q must lie strictly between 0 and 1");
    }
    if (!schedule.two_sided()) {
      throw validation_error("the tower needs a two-sided Foelner schedule");
    }
  }

  FoelnerSchedule schedule;
  BernoulliMeasure measure;
  Rational q;
  std::uint64_t depth = 1;
  std::size_t truncation = default_truncation;
  std::uint64_t horizon = default_find_horizon;
  std::size_t node_budget = default_node_budget;
  std::size_t workers = 1;
};

/// (q^k 2^{-i} / 2)^2
inline Rational l2_target_squared(Rational const& q, std::uint64_t k, std::size_t i) {
  return pow(q, 2 * k) * pow2(-2 * static_cast<long>(i)) / 4;
}

/// q^{2k} 2^{-2i}
inline Rational delta_scale(Rational const& q, std::uint64_t k, std::size_t i) {
  return pow(q, 2 * k) * pow2(-2 * static_cast<long>(i));
}

/// Squared L2 distance between (1/|F|) sum_{h in F} 1_{h<I>} and mu(I).
/// By invariance mu(g<I> n h<I>) = mu(<I> n d<I>) with d = g^{-1} h, which
/// differs from mu(I)^2 only when <I> and d<I> share a coordinate, i.e. for
/// d = gamma' gamma^{-1} with gamma, gamma' in the support of I.
inline Rational l2_deviation_squared(Pattern const& pattern, FiniteGroupSet const& f,
                                     BernoulliMeasure const& mu, ShiftAction const& action) {
  if (f.empty()) {
    throw domain_error("deviation over an empty set");
  }
  if (pattern.empty()) {
    return 0;
  }
  Group const& group = action.group();
  Rational const m = measure(pattern, mu);
  Rational const m2 = m * m;
  std::set<GroupElement> shifts;
  for (auto const& [a, ba] : pattern.constraints()) {
    GroupElement const inv = group.inverse({a});
    for (auto const& [b, bb] : pattern.constraints()) {
      shifts.insert(group.compose({b}, inv));
    }
  }
  Rational sum = 0;
  for (auto d : shifts) {
    std::uint64_t count = 0;
    for (auto g : f) {
      count += f.contains(group.compose(g, d)) ? 1 : 0;
    }
    if (count == 0) {
      continue;
    }
    auto const both = intersect(pattern, action.act_pattern(d, pattern));
    Rational const joint = both ? measure(*both, mu) : Rational(0);
    sum += Rational(to_integer(count)) * (joint - m2);
  }
  Rational const size(to_integer(f.size()));
  return sum / (size * size);
}

/// Measures of finite pattern unions to a requested precision.
class MeasureOracle {
 public:
  virtual ~MeasureOracle() = default;
  /// A value within `precision` of mu(union of patterns).
  virtual Rational approximate(std::span<Pattern const> patterns,
                               Rational const& precision) const = 0;
};

class ExactBernoulliOracle final : public MeasureOracle {
 public:
  explicit ExactBernoulliOracle(BernoulliMeasure mu) : mu_(std::move(mu)) {}
  Rational approximate(std::span<Pattern const> patterns, Rational const&) const override {
    return measure_union(patterns, mu_);
  }

 private:
  BernoulliMeasure mu_;
};

struct DeltaApprox {
  GroupElement g;
  std::size_t i = 0;
  std::uint64_t k = 0;
  std::vector<Pattern> patterns;
  Rational defect_bound;  // q^{2k} 2^{-2i} / 64
  Rational defect;        // mu(g<I> \ Delta), exact
};

/// Collects the first pieces of g<I_i> until their approximate measure
/// passes d - q^{2k} 2^{-2i} / 128, where d approximates mu(I_i); all
/// approximations use precision q^{2k} 2^{-2i} / 256.
inline DeltaApprox build_delta(GroupElement g, std::size_t i, std::uint64_t k,
                               Pattern const& pattern, CantorAction const& action,
                               MeasureOracle const& oracle, BernoulliMeasure const& mu,
                               Rational const& q) {
  Rational const eps = delta_scale(q, k, i);
  Rational const precision = eps / 256;
  std::vector<Pattern> const single{pattern};
  Rational const d = oracle.approximate(single, precision);
  Rational const threshold = d - eps / 128;
  DeltaApprox out{g, i, k, {}, eps / 64, 0};
  for (std::size_t j = 0;; ++j) {
    auto piece = action.image_piece(g, pattern, j);
    if (!piece) {
      throw enumeration_too_short("image of piece " + std::to_string(i) + " under " +
                                  std::to_string(g.code) + " ended after " + std::to_string(j) +
                                  " pieces below the stopping threshold");
    }
    out.patterns.push_back(std::move(*piece));
    if (oracle.approximate(out.patterns, precision) > threshold) {
      break;
    }
  }
  out.defect = measure(pattern, mu) - measure_union(out.patterns, mu);
  if (out.defect >= out.defect_bound) {
    throw precondition_error("measure oracle broke its precision: Delta defect " +
                             rational_string(out.defect));
  }
  return out;
}

struct FindNResult {
  std::uint64_t n = 0;
  Rational deviation_squared;
  Rational target_squared;
};

/// Smallest n >= 1 with squared deviation of I over F_n below the target.
inline FindNResult find_n(std::size_t i, std::uint64_t k, Pattern const& pattern,
                          KuceraConfig const& cfg) {
  ShiftAction const action(cfg.schedule.group());
  Rational const target = l2_target_squared(cfg.q, k, i);
  for (std::uint64_t n = 1; n <= cfg.horizon; ++n) {
    Rational dev = l2_deviation_squared(pattern, cfg.schedule.set(n), cfg.measure, action);
    if (dev < target) {
      return {n, std::move(dev), target};
    }
  }
  throw horizon_exceeded("n(" + std::to_string(i) + "," + std::to_string(k) + ")", cfg.horizon);
}

/// The same search through Delta approximations of the translates and the
/// measure oracle, for actions whose images are only enumerable.
inline FindNResult find_n_delta(std::size_t i, std::uint64_t k, Pattern const& pattern,
                                KuceraConfig const& cfg, CantorAction const& action,
                                MeasureOracle const& oracle) {
  Rational const target = l2_target_squared(cfg.q, k, i);
  Rational const precision = delta_scale(cfg.q, k, i) / 256;
  std::vector<Pattern> const single{pattern};
  Rational const d = oracle.approximate(single, precision);
  for (std::uint64_t n = 1; n <= cfg.horizon; ++n) {
    auto const f = cfg.schedule.set(n);
    std::vector<DeltaApprox> deltas;
    for (auto h : f) {
      deltas.push_back(build_delta(h, i, k, pattern, action, oracle, cfg.measure, cfg.q));
    }
    Rational pairs = 0;
    for (auto const& a : deltas) {
      for (auto const& b : deltas) {
        std::vector<Pattern> both;
        for (auto const& x : a.patterns) {
          for (auto const& y : b.patterns) {
            if (auto z = intersect(x, y)) {
              both.push_back(std::move(*z));
            }
          }
        }
        if (!both.empty()) {
          pairs += oracle.approximate(both, precision);
        }
      }
    }
    Rational const size(to_integer(f.size()));
    Rational dev = pairs / (size * size) - d * d;
    if (dev < target) {
      return {n, std::move(dev), target};
    }
  }
  throw horizon_exceeded("n(" + std::to_string(i) + "," + std::to_string(k) + ")", cfg.horizon);
}

struct PieceReport {
  std::size_t i = 0;  // 1-based position in the previous level
  std::uint64_t n = 0;
  std::uint64_t set_size = 0;
  Rational deviation_squared;
  Rational pattern_measure;
  Rational piece_measure;
  Rational bound;  // q mu(I_i) + q^k 2^{-i}
  bool within_bound = false;
};

struct TowerLevel {
  std::uint64_t k = 0;
  std::vector<Pattern> patterns;  // pairwise disjoint, carried to level k+1
  Rational measure_upper;         // measure of the carried patterns
  Rational full_measure;          // measure of the whole level before truncation
  bool truncated = false;
  std::vector<PieceReport> pieces;
  Rational step_bound;   // q mu(U_{k-1}) + q^k
  Rational decay_bound;  // (k+1) q^k
  bool step_ok = true;
  bool decay_ok = true;
  std::size_t diagram_nodes = 0;
};

namespace detail {

struct LevelDiagrams {
  std::vector<std::unique_ptr<Bdd>> managers;
  std::vector<std::pair<Bdd const*, Bdd::Node>> roots;
};

inline void carry_heaviest(TowerLevel& level, LevelDiagrams const& diagrams,
                           BernoulliMeasure const& mu, std::size_t truncation) {
  auto const cylinders = heaviest_cylinders(diagrams.roots, mu, truncation + 1);
  level.truncated = cylinders.size() > truncation;
  level.measure_upper = 0;
  for (std::size_t c = 0; c < cylinders.size() && c < truncation; ++c) {
    level.patterns.push_back(cylinders[c].pattern);
    level.measure_upper += cylinders[c].measure;
  }
  for (auto const& m : diagrams.managers) {
    level.diagram_nodes += m->size();
  }
}

}  // namespace detail

/// U_0: the first `truncation` pieces of U, disjointified.
inline TowerLevel tower_base(EffectivelyOpenSet const& u, KuceraConfig const& cfg) {
  TowerLevel level;
  auto const listed = u.stage(cfg.truncation);
  detail::LevelDiagrams diagrams;
  diagrams.managers.push_back(std::make_unique<Bdd>(cfg.node_budget));
  Bdd& bdd = *diagrams.managers.back();
  Bdd::Node const root = bdd.union_of(listed);
  diagrams.roots.emplace_back(&bdd, root);
  level.full_measure = bdd.measure(root, cfg.measure);
  if (level.full_measure >= cfg.q) {
    throw validation_error("mu(U) = " + rational_string(level.full_measure) +
                           " is not below q = " + rational_string(cfg.q));
  }
  detail::carry_heaviest(level, diagrams, cfg.measure, cfg.truncation);
  level.step_bound = 1;
  level.decay_bound = 1;
  level.decay_ok = level.full_measure < level.decay_bound;
  return level;
}

inline TowerLevel tower_step(TowerLevel const& prev, KuceraConfig const& cfg) {
  TowerLevel level;
  level.k = prev.k + 1;
  std::uint64_t const k = level.k;
  Rational const qk = pow(cfg.q, k);
  level.step_bound = cfg.q * prev.measure_upper + qk;
  level.decay_bound = Rational(to_integer(k + 1)) * qk;
  std::size_t const count = prev.patterns.size();
  level.pieces.resize(count);

  std::size_t const chunks = std::max<std::size_t>(1, std::min(cfg.workers, count));
  detail::LevelDiagrams diagrams;
  for (std::size_t c = 0; c < chunks; ++c) {
    diagrams.managers.push_back(std::make_unique<Bdd>(cfg.node_budget));
  }
  std::vector<Bdd::Node> roots(count, Bdd::zero);
  std::vector<std::size_t> owners(count, 0);
  ShiftAction const action(cfg.schedule.group());
  Group const& group = action.group();

  for_each_chunk(count, chunks, [&](std::size_t c, std::size_t begin, std::size_t end) {
    Bdd& bdd = *diagrams.managers[c];
    std::map<std::uint64_t, Bdd::Node> translates;  // code of g -> g^{-1} U_{k-1}
    auto translate = [&](GroupElement g) {
      if (auto it = translates.find(g.code); it != translates.end()) {
        return it->second;
      }
      GroupElement const inv = group.inverse(g);
      Bdd::Node acc = Bdd::zero;
      for (auto const& j : prev.patterns) {
        acc = bdd.apply_or(acc, bdd.cube(action.act_pattern(inv, j)));
      }
      translates.emplace(g.code, acc);
      return acc;
    };
    for (std::size_t t = begin; t < end; ++t) {
      std::size_t const i = t + 1;
      Pattern const& piece = prev.patterns[t];
      auto const found = find_n(i, k, piece, cfg);
      auto const f = cfg.schedule.set(found.n);
      Bdd::Node acc = bdd.cube(piece);
      for (auto g : f) {
        acc = bdd.apply_and(acc, translate(g));
        if (acc == Bdd::zero) {
          break;
        }
      }
      roots[t] = acc;
      owners[t] = c;
      PieceReport& r = level.pieces[t];
      r.i = i;
      r.n = found.n;
      r.set_size = f.size();
      r.deviation_squared = found.deviation_squared;
      r.pattern_measure = measure(piece, cfg.measure);
      r.piece_measure = bdd.measure(acc, cfg.measure);
      r.bound = cfg.q * r.pattern_measure + qk * pow2(-static_cast<long>(i));
      r.within_bound = r.piece_measure < r.bound;
    }
  });

  for (std::size_t t = 0; t < count; ++t) {
    diagrams.roots.emplace_back(diagrams.managers[owners[t]].get(), roots[t]);
  }
  level.full_measure = 0;
  for (auto const& r : level.pieces) {
    level.full_measure += r.piece_measure;
    level.step_ok = level.step_ok && r.within_bound;
  }
  level.step_ok = level.step_ok && level.full_measure < level.step_bound;
  level.decay_ok = level.full_measure < level.decay_bound;
  detail::carry_heaviest(level, diagrams, cfg.measure, cfg.truncation);
  return level;
}

struct TowerReport {
  std::vector<TowerLevel> levels;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> test_levels;  // (m, first k with mu(U_k) < 2^{-m})
  bool all_ok = true;
};

inline TowerReport run_tower(EffectivelyOpenSet const& u, KuceraConfig const& cfg) {
  TowerReport report;
  report.levels.push_back(tower_base(u, cfg));
  for (std::uint64_t k = 1; k <= cfg.depth; ++k) {
    report.levels.push_back(tower_step(report.levels.back(), cfg));
  }
  for (auto const& level : report.levels) {
    report.all_ok = report.all_ok && level.step_ok && level.decay_ok;
  }
  for (std::uint64_t m = 1;; ++m) {
    Rational const threshold = pow2(-static_cast<long>(m));
    auto it = std::ranges::find_if(report.levels,
                                   [&](TowerLevel const& l) { return l.full_measure < threshold; });
    if (it == report.levels.end()) {
      break;
    }
    report.test_levels.emplace_back(m, it->k);
    if (it->full_measure == 0) {
      break;
    }
  }
  return report;
}

}  // namespace cergo
