// SPDX-License-Identifier: Apache-2.0

// Foelner machinery: translation defects, the Ornstein-Weiss two-sided
// defect, the smallest-canonical-index search for two-sided Foelner sets,
// tempering of a Foelner schedule and the C-tempered check.
//
// Every quantity here is a ratio of set cardinalities and is kept exact.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cergo/error.hpp"
#include "cergo/group.hpp"
#include "cergo/growth.hpp"
#include "cergo/parallel.hpp"
#include "cergo/rational.hpp"

namespace cergo {

/// |F (+) gF| / |F|
inline Rational left_defect(Group const& group, FiniteGroupSet const& f, GroupElement g) {
  if (f.empty()) {
    throw domain_error("defect of an empty set");
  }
  return ratio(symmetric_difference_size(f, translate_left(group, g, f)), f.size());
}

/// |F (+) Fg| / |F|
inline Rational right_defect(Group const& group, FiniteGroupSet const& f, GroupElement g) {
  if (f.empty()) {
    throw domain_error("defect of an empty set");
  }
  return ratio(symmetric_difference_size(f, translate_right(group, f, g)), f.size());
}

/// (|KFK| - |F|) / |F| for symmetric K containing the identity.
inline Rational ow_defect(Group const& group, FiniteGroupSet const& f, FiniteGroupSet const& k) {
  if (f.empty()) {
    throw domain_error("defect of an empty set");
  }
  if (!k.contains(group.identity())) {
    throw precondition_error("K must contain the identity");
  }
  if (!is_symmetric(group, k)) {
    throw precondition_error("K must be symmetric");
  }
  auto const kfk = product(group, product(group, k, f), k);
  return ratio(kfk.size() - f.size(), f.size());
}

/// K_n = {e} u S u S^{-1} where S holds the first n non-identity elements
/// in code order.
inline FiniteGroupSet search_window(Group const& group, std::uint64_t n) {
  std::vector<GroupElement> xs{group.identity()};
  for (std::uint64_t c = 1; c <= n; ++c) {
    xs.push_back({c});
    xs.push_back(group.inverse({c}));
  }
  return FiniteGroupSet::from_elements(std::move(xs));
}

inline constexpr std::uint64_t default_index_cap = std::uint64_t{1} << 20;

/// The set F with the smallest canonical index m <= index_cap such that
/// |K_n F K_n| - |F| <= |F| / n.  Candidates are decoded from m = 1, 2, ...
/// With several workers, blocks of indices are split across threads and the
/// smallest hit in the earliest block wins.
inline FiniteGroupSet search_two_sided(Group const& group, std::uint64_t n,
                                       std::uint64_t index_cap = default_index_cap,
                                       std::size_t workers = 1) {
  if (n == 0) {
    throw domain_error("search_two_sided needs n >= 1");
  }
  auto const k = search_window(group, n);
  auto satisfies = [&](std::uint64_t m) {
    auto const f = set_from_index(m);
    auto const kfk = product(group, product(group, k, f), k);
    return (kfk.size() - f.size()) * n <= f.size();
  };
  std::uint64_t const block = 4096 * std::max<std::size_t>(1, workers);
  for (std::uint64_t start = 1; start <= index_cap; start += block) {
    std::uint64_t const stop = std::min(index_cap, start + block - 1);
    std::size_t const span = static_cast<std::size_t>(stop - start + 1);
    std::vector<std::optional<std::uint64_t>> hits(std::max<std::size_t>(1, workers));
    for_each_chunk(span, workers, [&](std::size_t w, std::size_t b, std::size_t e) {
      for (std::size_t j = b; j < e; ++j) {
        if (satisfies(start + j)) {
          hits[w] = start + j;
          return;
        }
      }
    });
    for (auto const& h : hits) {
      if (h) {
        return set_from_index(*h);
      }
    }
  }
  throw search_exhausted(index_cap);
}

/// Schedules whose sets are balls B(radius(n)) of a group with a closed-form
/// ball count.  Products and unions of such balls are balls again
/// (B(a) B(b) = B(a + b) for word-metric balls), so cardinalities of the sets
/// appearing in tempering are available at any radius.
struct RadialStructure {
  QuasiPolynomial count;
  bool log_concave = false;
  bool linear_radius = false;                      // radius(n) = n
  std::function<Integer(Integer const&)> radius;  // strictly increasing in n
};

/// A total map n -> F_n (n >= 1) with its provenance.
class FoelnerSchedule {
 public:
  enum class Source { balls, dyadic_balls, searched, explicit_sets, tempered };

  static FoelnerSchedule balls(Group group) {
    auto s = std::make_shared<State>(Source::balls, std::move(group));
    return FoelnerSchedule(std::move(s));
  }

  /// F_n = B(2^n); in Z with either generating set these are [-2^n, 2^n].
  static FoelnerSchedule dyadic_balls(Group group) {
    auto s = std::make_shared<State>(Source::dyadic_balls, std::move(group));
    return FoelnerSchedule(std::move(s));
  }

  static FoelnerSchedule searched(Group group, std::uint64_t index_cap = default_index_cap) {
    auto s = std::make_shared<State>(Source::searched, std::move(group));
    s->index_cap = index_cap;
    return FoelnerSchedule(std::move(s));
  }

  static FoelnerSchedule explicit_sets(Group group, std::vector<FiniteGroupSet> sets) {
    if (sets.empty()) {
      throw validation_error("explicit schedule needs at least one set");
    }
    for (auto const& f : sets) {
      if (f.empty()) {
        throw validation_error("schedule sets must be nonempty");
      }
    }
    auto s = std::make_shared<State>(Source::explicit_sets, std::move(group));
    s->explicit_sets = std::move(sets);
    return FoelnerSchedule(std::move(s));
  }

  /// The subsequence i -> F_{indices[i-1]} of `base`.
  static FoelnerSchedule tempered(FoelnerSchedule const& base, std::vector<Integer> indices) {
    for (std::size_t i = 1; i < indices.size(); ++i) {
      if (indices[i] <= indices[i - 1]) {
        throw precondition_error("tempered index map must be strictly increasing");
      }
    }
    auto s = std::make_shared<State>(Source::tempered, base.group());
    s->base = base.state_;
    s->indices = std::move(indices);
    return FoelnerSchedule(std::move(s));
  }

  Source source() const noexcept { return state_->source; }
  Group const& group() const noexcept { return state_->group; }

  std::string describe() const {
    switch (state_->source) {
      case Source::balls: return "balls";
      case Source::dyadic_balls: return "dyadic_balls";
      case Source::searched: return "searched";
      case Source::explicit_sets: return "explicit";
      case Source::tempered: return "tempered(" + base().describe() + ")";
    }
    return "?";
  }

  /// Number of defined sets, when finite.
  std::optional<std::uint64_t> length() const {
    switch (state_->source) {
      case Source::explicit_sets: return state_->explicit_sets.size();
      case Source::tempered: return state_->indices.size();
      default: return std::nullopt;
    }
  }

  /// Balls and searched sets are two-sided by construction; explicit lists
  /// make no claim; tempering inherits from the base.
  bool two_sided() const {
    switch (state_->source) {
      case Source::explicit_sets: return false;
      case Source::tempered: return base().two_sided();
      default: return true;
    }
  }

  bool is_balls() const {
    return state_->source == Source::balls;
  }

  FoelnerSchedule base() const {
    if (!state_->base) {
      throw precondition_error("schedule has no base");
    }
    return FoelnerSchedule(state_->base);
  }

  std::vector<Integer> const& tempered_indices() const { return state_->indices; }

  /// F_n, materialized and cached.
  FiniteGroupSet set(std::uint64_t n) const {
    if (n == 0) {
      throw domain_error("schedules are indexed from 1");
    }
    if (auto len = length(); len && n > *len) {
      throw precondition_error("schedule index " + std::to_string(n) + " beyond its length " +
                               std::to_string(*len));
    }
    {
      std::lock_guard lock(state_->mutex);
      if (auto it = state_->cache.find(n); it != state_->cache.end()) {
        return it->second;
      }
    }
    FiniteGroupSet f = compute(n);
    std::lock_guard lock(state_->mutex);
    return state_->cache.emplace(n, std::move(f)).first->second;
  }

  std::optional<RadialStructure> radial() const {
    auto const& st = *state_;
    switch (st.source) {
      case Source::balls:
      case Source::dyadic_balls: {
        RadialStructure r{ball_count_formula(st.group.spec()), false, false, {}};
        r.log_concave = r.count.certify_log_concave();
        if (st.source == Source::balls) {
          r.linear_radius = true;
          r.radius = [](Integer const& n) { return n; };
        } else {
          r.radius = [](Integer const& n) {
            Integer p = 1;
            mpz_mul_2exp(p.get_mpz_t(), p.get_mpz_t(), to_u64(n));
            return p;
          };
        }
        return r;
      }
      case Source::tempered: {
        auto inner = base().radial();
        if (!inner) {
          return std::nullopt;
        }
        auto indices = st.indices;
        auto base_radius = inner->radius;
        inner->linear_radius = false;
        inner->radius = [indices, base_radius](Integer const& i) {
          if (i < 1 || i > static_cast<unsigned long>(indices.size())) {
            throw precondition_error("tempered index out of range");
          }
          return base_radius(indices[i.get_ui() - 1]);
        };
        return inner;
      }
      default: return std::nullopt;
    }
  }

  /// |F_n|, from the closed form when the schedule is radial.
  Integer cardinality(Integer const& n) const {
    if (auto r = radial()) {
      return r->count(r->radius(n));
    }
    return to_integer(set(to_u64(n)).size());
  }

 private:
  struct State {
    State(Source s, Group g) : source(s), group(std::move(g)) {}

    Source source;
    Group group;
    std::uint64_t index_cap = default_index_cap;
    std::vector<FiniteGroupSet> explicit_sets;
    std::shared_ptr<State const> base;
    std::vector<Integer> indices;
    mutable std::mutex mutex;
    mutable std::map<std::uint64_t, FiniteGroupSet> cache;
  };

  explicit FoelnerSchedule(std::shared_ptr<State const> s) : state_(std::move(s)) {}

  FiniteGroupSet compute(std::uint64_t n) const {
    auto const& st = *state_;
    switch (st.source) {
      case Source::balls: return st.group.ball(n);
      case Source::dyadic_balls:
        if (n > 40) {
          throw complexity_limit("B(2^" + std::to_string(n) + ") is beyond materialization");
        }
        return st.group.ball(std::uint64_t{1} << n);
      case Source::searched: return search_two_sided(st.group, n, st.index_cap);
      case Source::explicit_sets: return st.explicit_sets[n - 1];
      case Source::tempered: return base().set(to_u64(st.indices[n - 1]));
    }
    throw precondition_error("unknown schedule source");
  }

  std::shared_ptr<State const> state_;
};

/// One step of the tempering recursion: n_{i+1} and the inequality values
/// that selected it.
struct TemperStep {
  std::uint64_t i = 1;                // the index being chosen
  Integer n;                          // n_i
  Integer union_size;                 // |F~_{i-1}| (0 for i = 1)
  Integer symmetric_difference;       // |F_{n_i} (+) F~_{i-1}^{-1} F_{n_i}|
  Integer set_size;                   // |F_{n_i}|
  std::uint64_t evaluations = 0;      // predicate evaluations spent
};

struct TemperResult {
  FoelnerSchedule schedule;
  std::vector<Integer> indices;
  std::vector<TemperStep> trace;
};

inline constexpr std::uint64_t default_temper_horizon = 1'000'000;

namespace detail {

/// Smallest m >= lower with accept(m), for a predicate that is false then
/// true.  `score(m)` is a real proxy that decreases through zero with m; it
/// steers regula falsi inside the bracket, while accept() alone decides.
/// With `fast_bracket` the bracketing offsets grow doubly exponentially,
/// which is only affordable when evaluation cost grows slowly in m.
inline Integer first_accepted(Integer const& lower, std::function<bool(Integer const&)> const& accept,
                              std::function<mpf_class(Integer const&)> const& score,
                              bool fast_bracket, std::uint64_t horizon,
                              std::uint64_t& evaluations) {
  auto test = [&](Integer const& m) {
    if (++evaluations > horizon) {
      throw horizon_exceeded("tempering search", horizon);
    }
    return accept(m);
  };
  if (test(lower)) {
    return lower;
  }
  // bracket (lo, hi] with offsets 2^e, e = 0..16 and then e doubling, and
  // narrow the exponent
  Integer lo = lower;
  Integer hi;
  unsigned long e_lo = 0;
  unsigned long e_hi = 0;
  for (;;) {
    Integer offset = 1;
    mpz_mul_2exp(offset.get_mpz_t(), offset.get_mpz_t(), e_hi);
    hi = lower + offset;
    if (test(hi)) {
      break;
    }
    lo = hi;
    e_lo = e_hi;
    e_hi = (e_hi < 16 || !fast_bracket) ? e_hi + 1 : 2 * e_hi;
  }
  while (e_hi - e_lo > 1) {
    unsigned long const e = (e_lo + e_hi) / 2;
    Integer offset = 1;
    mpz_mul_2exp(offset.get_mpz_t(), offset.get_mpz_t(), e);
    Integer const mid = lower + offset;
    if (mid <= lo) {
      e_lo = e;
      continue;
    }
    if (test(mid)) {
      hi = mid;
      e_hi = e;
    } else {
      lo = mid;
      e_lo = e;
    }
  }
  // Illinois regula falsi on the score with bisection fallback
  mp_bitcnt_t const precision = mpz_sizeinbase(hi.get_mpz_t(), 2) + 128;
  mpf_class s_lo(score(lo), precision);
  mpf_class s_hi(score(hi), precision);
  int side = 0;
  int stalled = 0;
  while (hi - lo > 1) {
    Integer const width = hi - lo;
    Integer candidate;
    if (stalled >= 2 || s_lo <= s_hi) {
      candidate = lo + width / 2;
      stalled = 0;
    } else {
      mpf_class t(0, precision);
      t = s_lo / (s_lo - s_hi);
      mpf_class w(0, precision);
      w = width;
      w *= t;
      Integer step(w);
      if (step < 1) step = 1;
      if (step >= width) step = width - 1;
      candidate = lo + step;
    }
    bool const ok = test(candidate);
    mpf_class s(score(candidate), precision);
    Integer const before = hi - lo;
    if (ok) {
      hi = candidate;
      s_hi = s;
      if (side == 1) s_lo /= 2;
      side = 1;
    } else {
      lo = candidate;
      s_lo = s;
      if (side == -1) s_hi /= 2;
      side = -1;
    }
    stalled = 2 * (hi - lo) > before ? stalled + 1 : 0;
  }
  return hi;
}

}  // namespace detail

/// Tempered subsequence: n_1 = 1 and n_{i+1} is the first integer greater
/// than max(i + 1, n_i) with
///   |F_m (+) F~_i^{-1} F_m| * |F~_i| <= |F_m|,   F~_i = F_{n_1} u ... u F_{n_i},
/// which makes the subsequence 2-tempered.  Radial schedules are evaluated
/// through closed-form counts (and bracketed search when the count is
/// certified log-concave, which makes the condition monotone in m); other
/// schedules are scanned candidate by candidate.
inline TemperResult temper(FoelnerSchedule const& base, std::uint64_t count,
                           std::uint64_t horizon = default_temper_horizon) {
  if (count == 0) {
    throw domain_error("temper needs count >= 1");
  }
  TemperResult out{base, {Integer(1)}, {}};
  out.trace.push_back({1, Integer(1), 0, 0, base.cardinality(Integer(1)), 0});
  auto const radial = base.radial();
  Group const& group = base.group();
  FiniteGroupSet union_set;
  FiniteGroupSet union_inverse;
  if (!radial) {
    union_set = base.set(1);
    union_inverse = inverse_set(group, union_set);
  }
  for (std::uint64_t i = 1; i < count; ++i) {
    Integer const& last = out.indices.back();
    Integer lower = last + 1;
    if (lower < i + 2) {
      lower = i + 2;
    }
    if (auto len = base.length(); len && lower > *len) {
      throw horizon_exceeded("tempering ran past the end of the base schedule", *len);
    }
    TemperStep step;
    step.i = i + 1;
    if (radial) {
      Integer const r = radial->radius(last);
      Integer const c_r = radial->count(r);
      step.union_size = c_r;
      auto sizes = [&](Integer const& m) {
        Integer const rho = radial->radius(m);
        Integer const inner = radial->count(rho);
        Integer const outer = radial->count(Integer(rho + r));
        return std::pair<Integer, Integer>{inner, Integer(outer - inner)};
      };
      auto accept = [&](Integer const& m) {
        auto [inner, sdif] = sizes(m);
        return sdif * c_r <= inner;
      };
      Integer chosen;
      if (radial->log_concave) {
        auto score = [&](Integer const& m) {
          auto [inner, sdif] = sizes(m);
          mp_bitcnt_t const bits = mpz_sizeinbase(inner.get_mpz_t(), 2) + 128;
          mpf_class a(0, bits);
          a = Integer(sdif * c_r - inner);
          mpf_class b(0, bits);
          b = inner;
          a /= b;
          return a;
        };
        chosen = detail::first_accepted(lower, accept, score, radial->linear_radius, horizon,
                                         step.evaluations);
      } else {
        chosen = lower;
        for (;; chosen += 1) {
          if (++step.evaluations > horizon) {
            throw horizon_exceeded("tempering scan", horizon);
          }
          if (accept(chosen)) {
            break;
          }
        }
      }
      auto [inner, sdif] = sizes(chosen);
      step.n = chosen;
      step.symmetric_difference = sdif;
      step.set_size = inner;
    } else {
      Integer const c_r = to_integer(union_set.size());
      step.union_size = c_r;
      for (std::uint64_t m = to_u64(lower);; ++m) {
        if (++step.evaluations > horizon) {
          throw horizon_exceeded("tempering scan", horizon);
        }
        if (auto len = base.length(); len && m > *len) {
          throw horizon_exceeded("tempering ran past the end of the base schedule", *len);
        }
        auto const f = base.set(m);
        auto const shifted = product(group, union_inverse, f);
        auto const sdif = symmetric_difference_size(f, shifted);
        if (to_integer(sdif) * c_r <= to_integer(f.size())) {
          step.n = to_integer(m);
          step.symmetric_difference = to_integer(sdif);
          step.set_size = to_integer(f.size());
          union_set = set_union(union_set, f);
          union_inverse = inverse_set(group, union_set);
          break;
        }
      }
    }
    out.indices.push_back(step.n);
    out.trace.push_back(std::move(step));
  }
  out.schedule = FoelnerSchedule::tempered(base, out.indices);
  return out;
}

struct TemperedRow {
  std::uint64_t j = 0;
  Integer union_size;  // |U_{i<j} F_i^{-1} F_j|
  Integer set_size;    // |F_j|
};

struct TemperedCheck {
  bool holds = true;
  std::optional<std::uint64_t> violation;  // first j with union_size >= C |F_j|
  Rational violation_ratio;
  std::vector<TemperedRow> rows;
};

/// Checks |U_{i<j} F_i^{-1} F_j| < C |F_j| for 2 <= j <= upto.
inline TemperedCheck is_tempered(FoelnerSchedule const& s, std::uint64_t upto, Rational const& c) {
  TemperedCheck out;
  if (upto < 2) {
    return out;
  }
  auto check_row = [&](std::uint64_t j, Integer const& u, Integer const& f) {
    out.rows.push_back({j, u, f});
    if (out.holds && Rational(u) >= c * Rational(f)) {
      out.holds = false;
      out.violation = j;
      out.violation_ratio = make_rational(u, f);
    }
  };
  if (auto radial = s.radial()) {
    Integer max_radius = radial->radius(Integer(1));
    for (std::uint64_t j = 2; j <= upto; ++j) {
      Integer const rho = radial->radius(to_integer(j));
      check_row(j, radial->count(Integer(max_radius + rho)), radial->count(rho));
      max_radius = std::max(max_radius, rho);
    }
    return out;
  }
  Group const& group = s.group();
  FiniteGroupSet inverses = inverse_set(group, s.set(1));
  for (std::uint64_t j = 2; j <= upto; ++j) {
    auto const f = s.set(j);
    auto const u = product(group, inverses, f);
    check_row(j, to_integer(u.size()), to_integer(f.size()));
    inverses = set_union(inverses, inverse_set(group, f));
  }
  return out;
}

struct DefectReport {
  std::uint64_t n = 0;
  GroupElement element;
  Rational left_defect;
  Rational right_defect;
};

inline std::vector<DefectReport> verify_foelner(FoelnerSchedule const& s,
                                                std::vector<GroupElement> const& elements,
                                                std::uint64_t upto) {
  std::vector<DefectReport> out;
  for (std::uint64_t n = 1; n <= upto; ++n) {
    auto const f = s.set(n);
    for (auto g : elements) {
      out.push_back({n, g, left_defect(s.group(), f, g), right_defect(s.group(), f, g)});
    }
  }
  return out;
}

}  // namespace cergo
