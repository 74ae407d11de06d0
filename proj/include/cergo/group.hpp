// SPDX-License-Identifier: Apache-2.0

// Computable groups: elements are natural-number codes, composition and
// inversion are total computable maps on codes.  Two families ship:
// Z^d (with the unit-vector or the diagonal generating set) and the discrete
// Heisenberg group H3 with generators x^{+-1}, y^{+-1}.

#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cergo/encoding.hpp"
#include "cergo/error.hpp"
#include "cergo/rational.hpp"

namespace cergo {

struct GroupElement {
  std::uint64_t code = 0;

  friend constexpr auto operator<=>(GroupElement, GroupElement) = default;
};

inline constexpr GroupElement identity_element{0};

inline constexpr std::size_t max_dimension = 8;

/// Integer coordinates of an element: the lattice point for Z^d, (a, b, c)
/// for the Heisenberg matrix [[1, a, c], [0, 1, b], [0, 0, 1]].
struct Coordinates {
  std::array<std::int64_t, max_dimension> value{};
  std::size_t size = 0;

  Coordinates() = default;
  Coordinates(std::initializer_list<std::int64_t> xs) {
    if (xs.size() > max_dimension) {
      throw malformed_element("too many coordinates");
    }
    for (auto x : xs) {
      value[size++] = x;
    }
  }
  explicit Coordinates(std::span<std::int64_t const> xs) {
    if (xs.size() > max_dimension) {
      throw malformed_element("too many coordinates");
    }
    for (auto x : xs) {
      value[size++] = x;
    }
  }

  std::int64_t operator[](std::size_t i) const { return value[i]; }
  std::int64_t& operator[](std::size_t i) { return value[i]; }
  std::span<std::int64_t const> span() const { return {value.data(), size}; }

  friend bool operator==(Coordinates const& a, Coordinates const& b) {
    return std::ranges::equal(a.span(), b.span());
  }
};

enum class GroupKind { lattice, heisenberg };

enum class GeneratorChoice {
  unit_vectors,  // +-e_i; balls are l1 balls
  diagonal,      // every sum_{k in I} +-e_k over nonempty I; balls are boxes
  standard       // H3: x^{+-1}, y^{+-1}
};

struct GroupSpec {
  GroupKind kind = GroupKind::lattice;
  std::size_t dimension = 1;
  GeneratorChoice generators = GeneratorChoice::unit_vectors;

  static GroupSpec lattice(std::size_t d, GeneratorChoice gens = GeneratorChoice::unit_vectors) {
    if (d == 0 || d > max_dimension) {
      throw validation_error("lattice dimension must be in 1.." + std::to_string(max_dimension));
    }
    if (gens == GeneratorChoice::standard) {
      throw validation_error("lattice groups use unit_vectors or diagonal generators");
    }
    return {GroupKind::lattice, d, gens};
  }

  static GroupSpec heisenberg() { return {GroupKind::heisenberg, 3, GeneratorChoice::standard}; }

  std::string name() const {
    if (kind == GroupKind::heisenberg) {
      return "H3";
    }
    return "Z^" + std::to_string(dimension) +
           (generators == GeneratorChoice::diagonal ? "(diagonal)" : "(unit)");
  }

  friend bool operator==(GroupSpec const&, GroupSpec const&) = default;
};

class Group;

/// Finite set of group elements kept sorted by code without duplicates.
class FiniteGroupSet {
 public:
  FiniteGroupSet() = default;

  static FiniteGroupSet from_elements(std::vector<GroupElement> xs) {
    std::ranges::sort(xs);
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    FiniteGroupSet s;
    s.elements_ = std::move(xs);
    return s;
  }

  static FiniteGroupSet from_codes(std::span<std::uint64_t const> codes) {
    std::vector<GroupElement> xs;
    xs.reserve(codes.size());
    for (auto c : codes) {
      xs.push_back({c});
    }
    return from_elements(std::move(xs));
  }

  static FiniteGroupSet from_codes(std::initializer_list<std::uint64_t> codes) {
    return from_codes(std::span<std::uint64_t const>(codes.begin(), codes.size()));
  }

  std::size_t size() const noexcept { return elements_.size(); }
  bool empty() const noexcept { return elements_.empty(); }
  auto begin() const noexcept { return elements_.begin(); }
  auto end() const noexcept { return elements_.end(); }
  GroupElement operator[](std::size_t i) const { return elements_[i]; }
  std::vector<GroupElement> const& elements() const noexcept { return elements_; }

  bool contains(GroupElement g) const { return std::ranges::binary_search(elements_, g); }

  friend bool operator==(FiniteGroupSet const&, FiniteGroupSet const&) = default;

 private:
  std::vector<GroupElement> elements_;
};

inline FiniteGroupSet set_union(FiniteGroupSet const& a, FiniteGroupSet const& b) {
  std::vector<GroupElement> out;
  out.reserve(a.size() + b.size());
  std::ranges::set_union(a.elements(), b.elements(), std::back_inserter(out));
  return FiniteGroupSet::from_elements(std::move(out));
}

inline std::size_t intersection_size(FiniteGroupSet const& a, FiniteGroupSet const& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n, ++i, ++j;
    }
  }
  return n;
}

/// |a \ b|
inline std::size_t difference_size(FiniteGroupSet const& a, FiniteGroupSet const& b) {
  return a.size() - intersection_size(a, b);
}

inline std::size_t symmetric_difference_size(FiniteGroupSet const& a, FiniteGroupSet const& b) {
  return a.size() + b.size() - 2 * intersection_size(a, b);
}

bool is_subset(FiniteGroupSet const& a, FiniteGroupSet const& b);

/// Sum of 2^code over the set; a bijection between finite sets and naturals.
inline Integer canonical_index(FiniteGroupSet const& s) {
  Integer m = 0;
  for (auto g : s) {
    mpz_setbit(m.get_mpz_t(), g.code);
  }
  return m;
}

inline FiniteGroupSet set_from_index(Integer const& m) {
  if (sgn(m) < 0) {
    throw domain_error("canonical index must be nonnegative");
  }
  std::vector<GroupElement> xs;
  for (mp_bitcnt_t bit = mpz_scan1(m.get_mpz_t(), 0); bit != ~mp_bitcnt_t{0};
       bit = mpz_scan1(m.get_mpz_t(), bit + 1)) {
    xs.push_back({bit});
  }
  // already ascending
  return FiniteGroupSet::from_elements(std::move(xs));
}

inline FiniteGroupSet set_from_index(std::uint64_t m) {
  std::vector<GroupElement> xs;
  for (std::uint64_t bits = m; bits != 0; bits &= bits - 1) {
    xs.push_back({static_cast<std::uint64_t>(std::countr_zero(bits))});
  }
  FiniteGroupSet s = FiniteGroupSet::from_elements(std::move(xs));
  return s;
}

inline bool is_subset(FiniteGroupSet const& a, FiniteGroupSet const& b) {
  return std::ranges::includes(b.elements(), a.elements());
}

namespace detail {

struct BallCache {
  std::mutex mutex;
  std::vector<std::vector<std::uint64_t>> layers;  // layers[r] = sphere of radius r
  std::unordered_map<std::uint64_t, std::uint32_t> distance;
  std::map<std::uint64_t, FiniteGroupSet> balls;
};

}  // namespace detail

/// A computable group with a fixed symmetric generating set.  Copies share
/// the breadth-first ball cache; the cache is guarded by a mutex so that
/// concurrent readers only see fully built spheres.
class Group {
 public:
  static constexpr std::uint32_t default_radius_cap = 64;

  explicit Group(GroupSpec spec, std::uint32_t radius_cap = default_radius_cap)
      : spec_(spec), radius_cap_(radius_cap), cache_(std::make_shared<detail::BallCache>()) {
    if (spec_.kind == GroupKind::lattice) {
      (void)GroupSpec::lattice(spec_.dimension, spec_.generators);
    } else if (spec_.dimension != 3 || spec_.generators != GeneratorChoice::standard) {
      throw validation_error("H3 is three-dimensional with the standard generators");
    }
    build_generators();
    cache_->layers.push_back({identity_element.code});
    cache_->distance.emplace(identity_element.code, 0);
  }

  GroupSpec const& spec() const noexcept { return spec_; }
  std::size_t dimension() const noexcept { return spec_.dimension; }
  std::uint32_t radius_cap() const noexcept { return radius_cap_; }
  bool abelian() const noexcept { return spec_.kind == GroupKind::lattice; }

  GroupElement identity() const noexcept { return identity_element; }

  GroupElement encode(Coordinates const& x) const {
    if (x.size != dimension()) {
      throw malformed_element("expected " + std::to_string(dimension()) + " coordinates, got " +
                              std::to_string(x.size));
    }
    std::uint64_t code = encoding::zigzag(x[0]);
    for (std::size_t i = 1; i < x.size; ++i) {
      code = encoding::pair(code, encoding::zigzag(x[i]));
    }
    return {code};
  }

  Coordinates decode(GroupElement g) const {
    Coordinates x;
    x.size = dimension();
    std::uint64_t rest = g.code;
    for (std::size_t i = dimension(); i-- > 1;) {
      auto [head, last] = encoding::unpair(rest);
      x[i] = encoding::unzigzag(last);
      rest = head;
    }
    x[0] = encoding::unzigzag(rest);
    return x;
  }

  GroupElement compose(GroupElement g, GroupElement h) const {
    Coordinates const a = decode(g);
    Coordinates const b = decode(h);
    Coordinates c;
    c.size = dimension();
    if (spec_.kind == GroupKind::lattice) {
      for (std::size_t i = 0; i < c.size; ++i) {
        c[i] = checked_add(a[i], b[i]);
      }
    } else {
      // (a, b, c)(a', b', c') = (a + a', b + b', c + c' + a b')
      c[0] = checked_add(a[0], b[0]);
      c[1] = checked_add(a[1], b[1]);
      c[2] = checked_add(checked_add(a[2], b[2]), checked_mul(a[0], b[1]));
    }
    return encode(c);
  }

  GroupElement inverse(GroupElement g) const {
    Coordinates a = decode(g);
    if (spec_.kind == GroupKind::lattice) {
      for (std::size_t i = 0; i < a.size; ++i) {
        a[i] = -a[i];
      }
    } else {
      // (a, b, c)^{-1} = (-a, -b, ab - c)
      std::int64_t const c = checked_add(checked_mul(a[0], a[1]), -a[2]);
      a[0] = -a[0];
      a[1] = -a[1];
      a[2] = c;
    }
    return encode(a);
  }

  std::vector<GroupElement> const& generators() const noexcept { return generators_; }

  /// The n elements with the smallest codes.  Every natural number is a
  /// code, so these are codes 0..n-1.
  FiniteGroupSet enumerate(std::uint64_t n) const {
    if (n == 0) {
      throw domain_error("enumerate needs n >= 1");
    }
    std::vector<GroupElement> xs(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      xs[i] = {i};
    }
    return FiniteGroupSet::from_elements(std::move(xs));
  }

  /// Word length with respect to the generating set, by breadth-first search
  /// from the identity up to the radius cap.
  std::uint32_t word_norm(GroupElement g) const {
    (void)decode(g);
    std::lock_guard lock(cache_->mutex);
    for (std::uint32_t r = 0;; ++r) {
      if (auto it = cache_->distance.find(g.code); it != cache_->distance.end()) {
        return it->second;
      }
      if (r >= radius_cap_) {
        throw radius_exceeded(g.code, radius_cap_);
      }
      expand_locked(r + 1);
    }
  }

  /// B(n) = {g : |g| <= n}, cached per n.
  FiniteGroupSet ball(std::uint64_t n) const {
    std::lock_guard lock(cache_->mutex);
    if (auto it = cache_->balls.find(n); it != cache_->balls.end()) {
      return it->second;
    }
    expand_locked(n);
    std::vector<GroupElement> xs;
    for (std::uint64_t r = 0; r <= n; ++r) {
      for (auto c : cache_->layers[r]) {
        xs.push_back({c});
      }
    }
    auto [it, _] = cache_->balls.emplace(n, FiniteGroupSet::from_elements(std::move(xs)));
    return it->second;
  }

  /// |B(n)| without materializing the sorted ball.
  std::uint64_t ball_size(std::uint64_t n) const {
    std::lock_guard lock(cache_->mutex);
    expand_locked(n);
    std::uint64_t total = 0;
    for (std::uint64_t r = 0; r <= n; ++r) {
      total += cache_->layers[r].size();
    }
    return total;
  }

  /// |B(N)| / N^d.
  Rational estimate_growth(std::uint64_t big_n, unsigned d) const {
    if (big_n < 2) {
      throw domain_error("growth estimate needs N >= 2");
    }
    Integer denom;
    mpz_ui_pow_ui(denom.get_mpz_t(), big_n, d);
    return make_rational(to_integer(ball_size(big_n)), denom);
  }

 private:
  static std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) {
      throw malformed_element("coordinate overflow");
    }
    return r;
  }

  static std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) {
      throw malformed_element("coordinate overflow");
    }
    return r;
  }

  void build_generators() {
    std::size_t const d = dimension();
    if (spec_.kind == GroupKind::heisenberg) {
      for (Coordinates x : {Coordinates{1, 0, 0}, Coordinates{-1, 0, 0}, Coordinates{0, 1, 0},
                            Coordinates{0, -1, 0}}) {
        generators_.push_back(encode(x));
      }
    } else if (spec_.generators == GeneratorChoice::unit_vectors) {
      for (std::size_t i = 0; i < d; ++i) {
        for (std::int64_t s : {1, -1}) {
          Coordinates x;
          x.size = d;
          x[i] = s;
          generators_.push_back(encode(x));
        }
      }
    } else {
      // each coordinate in {-1, 0, 1}, not all zero
      std::size_t total = 1;
      for (std::size_t i = 0; i < d; ++i) {
        total *= 3;
      }
      for (std::size_t m = 0; m < total; ++m) {
        if (m == total / 2) {
          continue;  // the zero vector
        }
        Coordinates x;
        x.size = d;
        std::size_t t = m;
        for (std::size_t i = 0; i < d; ++i, t /= 3) {
          x[i] = static_cast<std::int64_t>(t % 3) - 1;
        }
        generators_.push_back(encode(x));
      }
    }
    std::ranges::sort(generators_);
  }

  void expand_locked(std::uint64_t radius) const {
    auto& layers = cache_->layers;
    auto& distance = cache_->distance;
    while (layers.size() <= radius) {
      auto const r = static_cast<std::uint32_t>(layers.size());
      std::vector<std::uint64_t> next;
      for (auto c : layers.back()) {
        for (auto s : generators_) {
          auto const h = compose({c}, s).code;
          if (distance.emplace(h, r).second) {
            next.push_back(h);
          }
        }
      }
      std::ranges::sort(next);
      layers.push_back(std::move(next));
    }
  }

  GroupSpec spec_;
  std::uint32_t radius_cap_;
  std::vector<GroupElement> generators_;
  std::shared_ptr<detail::BallCache> cache_;
};

inline FiniteGroupSet inverse_set(Group const& group, FiniteGroupSet const& s) {
  std::vector<GroupElement> xs;
  xs.reserve(s.size());
  for (auto g : s) {
    xs.push_back(group.inverse(g));
  }
  return FiniteGroupSet::from_elements(std::move(xs));
}

inline bool is_symmetric(Group const& group, FiniteGroupSet const& s) {
  return inverse_set(group, s) == s;
}

/// The product set AB = {ab : a in A, b in B}.
inline FiniteGroupSet product(Group const& group, FiniteGroupSet const& a,
                              FiniteGroupSet const& b) {
  std::vector<GroupElement> xs;
  xs.reserve(a.size() * b.size());
  for (auto x : a) {
    for (auto y : b) {
      xs.push_back(group.compose(x, y));
    }
  }
  return FiniteGroupSet::from_elements(std::move(xs));
}

/// gF
inline FiniteGroupSet translate_left(Group const& group, GroupElement g, FiniteGroupSet const& f) {
  std::vector<GroupElement> xs;
  xs.reserve(f.size());
  for (auto x : f) {
    xs.push_back(group.compose(g, x));
  }
  return FiniteGroupSet::from_elements(std::move(xs));
}

/// Fg
inline FiniteGroupSet translate_right(Group const& group, FiniteGroupSet const& f, GroupElement g) {
  std::vector<GroupElement> xs;
  xs.reserve(f.size());
  for (auto x : f) {
    xs.push_back(group.compose(x, g));
  }
  return FiniteGroupSet::from_elements(std::move(xs));
}

}  // namespace cergo
