// SPDX-License-Identifier: Apache-2.0

// Cantor space {0,1}^N indexed by group elements through their codes:
// coordinate beta(gamma) = code(gamma).  Patterns (finitely many fixed
// coordinates) generalize prefix cylinders; Bernoulli product measures give
// every pattern an exact rational measure; a group acts by shifting
// coordinates, (g.w)(gamma) = w(g^{-1} gamma).

#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "cergo/error.hpp"
#include "cergo/foelner.hpp"
#include "cergo/group.hpp"
#include "cergo/parallel.hpp"
#include "cergo/rational.hpp"

namespace cergo {

/// Finite partial configuration: sorted (coordinate, bit) pairs with
/// distinct coordinates.  The empty pattern is the whole space.
class Pattern {
 public:
  using Constraint = std::pair<std::uint64_t, bool>;

  Pattern() = default;

  static Pattern from_constraints(std::vector<Constraint> cs) {
    std::ranges::sort(cs);
    cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
    for (std::size_t i = 1; i < cs.size(); ++i) {
      if (cs[i].first == cs[i - 1].first) {
        throw domain_error("pattern fixes coordinate " + std::to_string(cs[i].first) +
                           " to both bits");
      }
    }
    Pattern p;
    p.constraints_ = std::move(cs);
    return p;
  }

  /// The cylinder [w] of a finite word: coordinates 0..|w|-1.
  static Pattern prefix(std::string_view word) {
    std::vector<Constraint> cs;
    for (std::size_t i = 0; i < word.size(); ++i) {
      if (word[i] != '0' && word[i] != '1') {
        throw validation_error("cylinder words are made of 0 and 1");
      }
      cs.emplace_back(i, word[i] == '1');
    }
    return from_constraints(std::move(cs));
  }

  std::vector<Constraint> const& constraints() const noexcept { return constraints_; }
  std::size_t size() const noexcept { return constraints_.size(); }
  bool empty() const noexcept { return constraints_.empty(); }

  std::optional<bool> at(std::uint64_t coordinate) const {
    auto it = std::ranges::lower_bound(constraints_, coordinate, {}, &Constraint::first);
    if (it != constraints_.end() && it->first == coordinate) {
      return it->second;
    }
    return std::nullopt;
  }

  template <typename Point>
  bool contains(Point const& w) const {
    return std::ranges::all_of(constraints_,
                               [&](Constraint const& c) { return w.bit(c.first) == c.second; });
  }

  /// Set inclusion <P> subset of <coarser>: every constraint of coarser
  /// appears here.
  bool refines(Pattern const& coarser) const {
    return std::ranges::includes(constraints_, coarser.constraints_);
  }

  std::string to_string() const {
    std::string s = "{";
    for (std::size_t i = 0; i < constraints_.size(); ++i) {
      s += (i ? "," : "") + std::to_string(constraints_[i].first) + ":" +
           (constraints_[i].second ? "1" : "0");
    }
    return s + "}";
  }

  friend bool operator==(Pattern const&, Pattern const&) = default;
  friend auto operator<=>(Pattern const&, Pattern const&) = default;

 private:
  std::vector<Constraint> constraints_;
};

/// <a> n <b> as a pattern, or nothing when they disagree somewhere.
inline std::optional<Pattern> intersect(Pattern const& a, Pattern const& b) {
  std::vector<Pattern::Constraint> cs;
  cs.reserve(a.size() + b.size());
  auto i = a.constraints().begin();
  auto j = b.constraints().begin();
  while (i != a.constraints().end() || j != b.constraints().end()) {
    if (j == b.constraints().end() || (i != a.constraints().end() && i->first < j->first)) {
      cs.push_back(*i++);
    } else if (i == a.constraints().end() || j->first < i->first) {
      cs.push_back(*j++);
    } else {
      if (i->second != j->second) {
        return std::nullopt;
      }
      cs.push_back(*i++);
      ++j;
    }
  }
  return Pattern::from_constraints(std::move(cs));
}

/// Prefix words whose cylinders partition <P>.
inline std::vector<Pattern> to_prefix_cylinders(Pattern const& p, std::size_t free_limit = 24) {
  if (p.empty()) {
    return {Pattern{}};
  }
  std::uint64_t const length = p.constraints().back().first + 1;
  std::vector<std::uint64_t> free;
  for (std::uint64_t c = 0; c < length; ++c) {
    if (!p.at(c)) {
      free.push_back(c);
    }
  }
  if (free.size() > free_limit) {
    throw complexity_limit("prefix expansion needs 2^" + std::to_string(free.size()) + " words");
  }
  std::vector<Pattern> out;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << free.size()); ++bits) {
    std::string word(length, '0');
    for (auto [c, b] : p.constraints()) {
      word[c] = b ? '1' : '0';
    }
    for (std::size_t t = 0; t < free.size(); ++t) {
      word[free[t]] = ((bits >> t) & 1U) ? '1' : '0';
    }
    out.push_back(Pattern::prefix(word));
  }
  return out;
}

/// i.i.d. bits with P(bit = 1) = p.
class BernoulliMeasure {
 public:
  explicit BernoulliMeasure(Rational p) : p_(std::move(p)) {
    if (p_ <= 0 || p_ >= 1) {
      throw validation_error("Bernoulli parameter must lie strictly between 0 and 1");
    }
  }

  Rational const& p() const noexcept { return p_; }

  /// p^ones (1 - p)^zeros
  Rational weight(std::size_t ones, std::size_t zeros) const {
    return pow(p_, ones) * pow(Rational(1 - p_), zeros);
  }

 private:
  Rational p_;
};

inline Rational measure(Pattern const& pattern, BernoulliMeasure const& mu) {
  std::size_t ones = 0;
  for (auto const& c : pattern.constraints()) {
    ones += c.second ? 1 : 0;
  }
  return mu.weight(ones, pattern.size() - ones);
}

inline constexpr std::size_t default_coordinate_limit = 24;

/// Exact measure of a finite union: every pattern is expanded to full
/// assignments of the jointly constrained coordinates, which are deduplicated
/// and summed.
inline Rational measure_union(std::span<Pattern const> patterns, BernoulliMeasure const& mu,
                              std::size_t coordinate_limit = default_coordinate_limit) {
  if (patterns.empty()) {
    return 0;
  }
  std::vector<std::uint64_t> coords;
  for (auto const& p : patterns) {
    for (auto const& c : p.constraints()) {
      coords.push_back(c.first);
    }
  }
  std::ranges::sort(coords);
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  std::size_t const k = coords.size();
  if (k > coordinate_limit) {
    throw complexity_limit("union constrains " + std::to_string(k) + " coordinates (limit " +
                           std::to_string(coordinate_limit) + ")");
  }
  std::vector<std::uint8_t> covered(std::size_t{1} << k, 0);
  std::uint64_t const all = (std::uint64_t{1} << k) - 1;
  for (auto const& p : patterns) {
    std::uint64_t fixed = 0;
    std::uint64_t value = 0;
    for (auto const& [c, b] : p.constraints()) {
      auto const pos = static_cast<std::size_t>(std::ranges::lower_bound(coords, c) - coords.begin());
      fixed |= std::uint64_t{1} << pos;
      value |= static_cast<std::uint64_t>(b) << pos;
    }
    std::uint64_t const free = all & ~fixed;
    for (std::uint64_t s = free;; s = (s - 1) & free) {
      covered[value | s] = 1;
      if (s == 0) {
        break;
      }
    }
  }
  std::vector<std::uint64_t> by_ones(k + 1, 0);
  for (std::uint64_t a = 0; a <= all; ++a) {
    if (covered[a]) {
      ++by_ones[static_cast<std::size_t>(std::popcount(a))];
    }
  }
  Rational total = 0;
  for (std::size_t j = 0; j <= k; ++j) {
    if (by_ones[j] != 0) {
      total += Rational(to_integer(by_ones[j])) * mu.weight(j, k - j);
    }
  }
  return total;
}

inline Rational measure_union(std::vector<Pattern> const& patterns, BernoulliMeasure const& mu,
                              std::size_t coordinate_limit = default_coordinate_limit) {
  return measure_union(std::span<Pattern const>(patterns), mu, coordinate_limit);
}

/// A union of patterns listed by a total enumerator; the list at stage s is
/// the first s pieces, so stages are prefixes of each other.  Finite lists
/// end by returning nothing.
class EffectivelyOpenSet {
 public:
  using Enumerator = std::function<std::optional<Pattern>(std::size_t)>;

  explicit EffectivelyOpenSet(Enumerator pieces) : pieces_(std::move(pieces)) {}

  static EffectivelyOpenSet finite(std::vector<Pattern> patterns) {
    return EffectivelyOpenSet(
        [ps = std::move(patterns)](std::size_t j) -> std::optional<Pattern> {
          if (j < ps.size()) {
            return ps[j];
          }
          return std::nullopt;
        });
  }

  std::optional<Pattern> piece(std::size_t j) const { return pieces_(j); }

  std::vector<Pattern> stage(std::size_t s) const {
    std::vector<Pattern> out;
    for (std::size_t j = 0; j < s; ++j) {
      auto p = pieces_(j);
      if (!p) {
        break;
      }
      out.push_back(std::move(*p));
    }
    return out;
  }

 private:
  Enumerator pieces_;
};

/// Deterministic point of {0,1}^N: either an explicit finite prefix followed
/// by a constant bit, or a seeded pseudo-random sequence standing in for a
/// mu-random point.  Bits are pure functions of the coordinate.
class PointSource {
 public:
  struct ExplicitBits {
    std::vector<bool> prefix;
    bool fill = false;
  };
  struct Seeded {
    std::uint64_t seed = 0;
    Rational p;
  };

  static PointSource explicit_bits(std::vector<bool> prefix, bool fill = false) {
    return PointSource(ExplicitBits{std::move(prefix), fill});
  }

  static PointSource explicit_bits(std::string_view word, bool fill = false) {
    std::vector<bool> bits;
    for (char c : word) {
      if (c != '0' && c != '1') {
        throw validation_error("point prefix must consist of 0 and 1");
      }
      bits.push_back(c == '1');
    }
    return explicit_bits(std::move(bits), fill);
  }

  static PointSource seeded(std::uint64_t seed, Rational const& p) {
    if (p < 0 || p > 1) {
      throw validation_error("seeded point probability must lie in [0, 1]");
    }
    PointSource s(Seeded{seed, p});
    // threshold = floor(p 2^64), saturating at p = 1
    Integer scaled = p.get_num();
    mpz_mul_2exp(scaled.get_mpz_t(), scaled.get_mpz_t(), 64);
    scaled /= p.get_den();
    s.threshold_ = fits_u64(scaled) ? to_u64(scaled) : ~std::uint64_t{0};
    s.saturated_ = !fits_u64(scaled);
    return s;
  }

  bool bit(std::uint64_t coordinate) const {
    if (auto const* e = std::get_if<ExplicitBits>(&kind_)) {
      return coordinate < e->prefix.size() ? e->prefix[coordinate] : e->fill;
    }
    auto const& s = std::get<Seeded>(kind_);
    std::uint64_t const u = mix(mix(s.seed) ^ (coordinate * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL));
    return saturated_ || u < threshold_;
  }

  std::string describe() const {
    if (auto const* e = std::get_if<ExplicitBits>(&kind_)) {
      std::string w;
      for (bool b : e->prefix) {
        w.push_back(b ? '1' : '0');
      }
      return "bits:" + w + "+" + (e->fill ? "1" : "0");
    }
    auto const& s = std::get<Seeded>(kind_);
    return "seed:" + std::to_string(s.seed) + "@" + rational_string(s.p);
  }

 private:
  explicit PointSource(std::variant<ExplicitBits, Seeded> k) : kind_(std::move(k)) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::variant<ExplicitBits, Seeded> kind_;
  std::uint64_t threshold_ = 0;
  bool saturated_ = false;
};

/// A computable action on Cantor space: the image g<P> of a pattern is an
/// effectively open set given by an enumerator of pieces.
class CantorAction {
 public:
  virtual ~CantorAction() = default;

  virtual Group const& group() const = 0;

  /// The j-th piece of g<P>, or nothing once the list has ended.
  virtual std::optional<Pattern> image_piece(GroupElement g, Pattern const& p,
                                             std::size_t j) const = 0;

  /// g<P> as one pattern, for actions where images are cylinders.
  virtual std::optional<Pattern> exact_image(GroupElement, Pattern const&) const {
    return std::nullopt;
  }
};

/// The shift action of a group on configurations indexed by its codes.
class ShiftAction final : public CantorAction {
 public:
  explicit ShiftAction(Group group) : group_(std::move(group)) {}

  Group const& group() const noexcept override { return group_; }

  std::optional<Pattern> image_piece(GroupElement g, Pattern const& p,
                                     std::size_t j) const override {
    if (j == 0) {
      return act_pattern(g, p);
    }
    return std::nullopt;
  }

  std::optional<Pattern> exact_image(GroupElement g, Pattern const& p) const override {
    return act_pattern(g, p);
  }

  /// The image g<P> = {g.w : w in <P>}: Q(code(g gamma)) = P(code(gamma)).
  Pattern act_pattern(GroupElement g, Pattern const& p) const {
    std::vector<Pattern::Constraint> cs;
    cs.reserve(p.size());
    for (auto const& [c, b] : p.constraints()) {
      cs.emplace_back(group_.compose(g, {c}).code, b);
    }
    return Pattern::from_constraints(std::move(cs));
  }

  /// (g.w)(gamma) = w(g^{-1} gamma), evaluated lazily.
  template <typename Point>
  class Translated {
   public:
    Translated(Group const& group, Point const& base, GroupElement g)
        : group_(&group), base_(&base), g_inverse_(group.inverse(g)) {}

    bool bit(std::uint64_t coordinate) const {
      return base_->bit(group_->compose(g_inverse_, {coordinate}).code);
    }

   private:
    Group const* group_;
    Point const* base_;
    GroupElement g_inverse_;
  };

  template <typename Point>
  Translated<Point> act_point(GroupElement g, Point const& w) const {
    return Translated<Point>(group_, w, g);
  }

 private:
  Group group_;
};

/// (mu(P), mu(gP)); equal for Bernoulli measures and shifts.
inline std::pair<Rational, Rational> invariance_check(Pattern const& p, GroupElement g,
                                                      ShiftAction const& action,
                                                      BernoulliMeasure const& mu) {
  return {measure(p, mu), measure(action.act_pattern(g, p), mu)};
}

struct StepPiece {
  Pattern pattern;
  Rational value;
};

using StepFunction = std::vector<StepPiece>;

/// Lower semicomputable f >= 0 given by a nondecreasing schedule of step
/// functions.  Overlapping pieces are resolved by max; a point in no piece
/// has value 0.
class Observable {
 public:
  Observable(std::vector<StepFunction> stages, std::optional<Rational> bound)
      : stages_(std::move(stages)), bound_(std::move(bound)) {
    if (stages_.empty()) {
      throw validation_error("observable needs at least one stage");
    }
    for (auto const& stage : stages_) {
      for (auto const& piece : stage) {
        if (piece.value < 0) {
          throw validation_error("observable values must be nonnegative");
        }
        if (bound_ && piece.value > *bound_) {
          throw validation_error("observable value exceeds its declared bound");
        }
      }
    }
  }

  static Observable indicator(Pattern p) {
    return Observable({StepFunction{{std::move(p), Rational(1)}}}, Rational(1));
  }

  static Observable constant(Rational c) {
    Rational bound = c;
    return Observable({StepFunction{{Pattern{}, std::move(c)}}}, std::move(bound));
  }

  std::size_t stage_count() const noexcept { return stages_.size(); }
  std::size_t last_stage() const noexcept { return stages_.size() - 1; }
  StepFunction const& stage(std::size_t s) const { return stages_.at(s); }
  std::optional<Rational> const& bound() const noexcept { return bound_; }
  bool bounded() const noexcept { return bound_.has_value(); }

  template <typename Point>
  Rational eval(Point const& w, std::size_t s) const {
    if (s >= stages_.size()) {
      throw precondition_error("observable stage " + std::to_string(s) + " not in schedule");
    }
    Rational best = 0;
    for (auto const& piece : stages_[s]) {
      if (piece.value > best && piece.pattern.contains(w)) {
        best = piece.value;
      }
    }
    return best;
  }

  /// Integral of stage s: sum over the distinct values v_1 > v_2 > ... of
  /// (v_t - v_{t+1}) mu(union of pieces with value >= v_t).
  Rational integral(std::size_t s, BernoulliMeasure const& mu,
                    std::size_t coordinate_limit = default_coordinate_limit) const {
    auto pieces = stage(s);
    std::ranges::sort(pieces, std::greater<>{}, &StepPiece::value);
    Rational total = 0;
    std::vector<Pattern> level;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      level.push_back(pieces[i].pattern);
      Rational const next = i + 1 < pieces.size() ? pieces[i + 1].value : Rational(0);
      if (pieces[i].value != next) {
        total += (pieces[i].value - next) * measure_union(level, mu, coordinate_limit);
      }
    }
    return total;
  }

 private:
  std::vector<StepFunction> stages_;
  std::optional<Rational> bound_;
};

template <typename Point>
Rational eval_observable(Observable const& f, Point const& w, std::size_t stage) {
  return f.eval(w, stage);
}

/// (1/|F|) sum_{g in F} f_stage(g.w), summed in ascending code order per
/// chunk and reduced in chunk order.
template <typename Point>
Rational ergodic_average(Observable const& f, Point const& w, FiniteGroupSet const& set,
                         ShiftAction const& action, std::size_t stage, std::size_t workers = 1) {
  if (set.empty()) {
    throw domain_error("average over an empty set");
  }
  std::size_t const chunks = std::max<std::size_t>(1, std::min(workers, set.size()));
  std::vector<Rational> partial(chunks);
  for_each_chunk(set.size(), chunks, [&](std::size_t c, std::size_t b, std::size_t e) {
    Rational sum = 0;
    for (std::size_t i = b; i < e; ++i) {
      sum += f.eval(action.act_point(set[i], w), stage);
    }
    partial[c] = sum;
  });
  Rational total = 0;
  for (auto const& s : partial) {
    total += s;
  }
  return total / Rational(to_integer(set.size()));
}

struct LimsupRow {
  std::uint64_t n = 0;
  std::uint64_t size = 0;
  Rational average;          // (1/|F_n|) sum f(g.w)
  Rational shifted_average;  // (1/|F_n|) sum f(gh.w)
  std::optional<Rational> bound;  // 2 |f|_inf |F_n \ F_n h| / |F_n|
};

/// Group-side probe for a function on the group itself.
inline std::vector<LimsupRow> limsup_probe_group(std::function<Rational(GroupElement)> const& f,
                                                 FoelnerSchedule const& schedule, GroupElement h,
                                                 std::span<std::uint64_t const> ns,
                                                 std::optional<Rational> sup_norm = std::nullopt) {
  Group const& group = schedule.group();
  std::vector<LimsupRow> rows;
  for (auto n : ns) {
    auto const set = schedule.set(n);
    Rational sum = 0;
    Rational shifted = 0;
    for (auto g : set) {
      sum += f(g);
      shifted += f(group.compose(g, h));
    }
    Rational const size(to_integer(set.size()));
    LimsupRow row{n, set.size(), sum / size, shifted / size, std::nullopt};
    if (sup_norm) {
      auto const moved = translate_right(group, set, h);
      row.bound = 2 * *sup_norm * Rational(to_integer(difference_size(set, moved))) / size;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Paired averages of g -> f(g.w) and g -> f(gh.w).  Unbounded observables
/// are only accepted over balls: for general two-sided Foelner sequences the
/// limsup is not translation invariant (f(2^k + 1) = 2^k on Z with
/// [-2^n, 2^n] is a counterexample).
template <typename Point>
std::vector<LimsupRow> limsup_invariance_probe(Observable const& f, Point const& w,
                                               FoelnerSchedule const& schedule, GroupElement h,
                                               std::span<std::uint64_t const> ns,
                                               ShiftAction const& action, std::size_t stage) {
  if (!f.bounded() && !schedule.is_balls()) {
    throw precondition_error(
        "unbounded observables need the ball schedule: limsup invariance fails for general "
        "Foelner sequences (f(2^k+1) = 2^k on Z over [-2^n, 2^n])");
  }
  auto value = [&](GroupElement g) { return f.eval(action.act_point(g, w), stage); };
  return limsup_probe_group(value, schedule, h, ns, f.bound());
}

/// f(2^k + 1) = 2^k on Z, zero elsewhere.
inline std::function<Rational(GroupElement)> limsup_counterexample(Group const& group) {
  if (group.spec().kind != GroupKind::lattice || group.dimension() != 1) {
    throw validation_error("the counterexample lives on Z");
  }
  return [group](GroupElement g) -> Rational {
    std::int64_t const z = group.decode(g)[0];
    std::int64_t const t = z - 1;
    if (t >= 1 && std::has_single_bit(static_cast<std::uint64_t>(t))) {
      return Rational(to_integer(static_cast<std::uint64_t>(t)));
    }
    return 0;
  };
}

}  // namespace cergo
