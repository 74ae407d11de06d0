// SPDX-License-Identifier: Apache-2.0

// Reduced ordered binary decision diagrams over Cantor-space coordinates.
// Variables are coordinates, tested in ascending order from the root.  Every
// root-to-one path is a pattern and distinct paths are disjoint, so a diagram
// is a disjointified pattern union with an exact measure.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cergo/cantor.hpp"
#include "cergo/error.hpp"
#include "cergo/rational.hpp"

namespace cergo {

inline constexpr std::size_t default_node_budget = std::size_t{1} << 22;

class Bdd {
 public:
  using Node = std::uint32_t;
  static constexpr Node zero = 0;
  static constexpr Node one = 1;

  struct NodeData {
    std::uint64_t var;
    Node lo;
    Node hi;
  };

  explicit Bdd(std::size_t node_budget = default_node_budget) : budget_(node_budget) {
    nodes_.push_back({terminal_var, zero, zero});
    nodes_.push_back({terminal_var, one, one});
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t budget() const noexcept { return budget_; }
  NodeData const& node(Node n) const { return nodes_[n]; }
  static bool terminal(Node n) noexcept { return n <= one; }

  Node make(std::uint64_t var, Node lo, Node hi) {
    if (lo == hi) {
      return lo;
    }
    Key const key{var, lo, hi};
    if (auto it = unique_.find(key); it != unique_.end()) {
      return it->second;
    }
    if (nodes_.size() >= budget_) {
      throw complexity_limit("decision diagram exceeded its node budget of " +
                             std::to_string(budget_));
    }
    auto const id = static_cast<Node>(nodes_.size());
    nodes_.push_back({var, lo, hi});
    unique_.emplace(key, id);
    return id;
  }

  Node cube(Pattern const& p) {
    Node n = one;
    auto const& cs = p.constraints();
    for (auto it = cs.rbegin(); it != cs.rend(); ++it) {
      n = it->second ? make(it->first, zero, n) : make(it->first, n, zero);
    }
    return n;
  }

  Node apply_and(Node a, Node b) { return apply(a, b, true); }
  Node apply_or(Node a, Node b) { return apply(a, b, false); }

  Node union_of(std::span<Pattern const> ps) {
    Node n = zero;
    for (auto const& p : ps) {
      n = apply_or(n, cube(p));
    }
    return n;
  }

  Rational measure(Node root, BernoulliMeasure const& mu) const {
    std::unordered_map<Node, Rational> memo;
    Rational const q = 1 - mu.p();
    auto rec = [&](auto&& self, Node n) -> Rational {
      if (terminal(n)) {
        return n == one ? Rational(1) : Rational(0);
      }
      if (auto it = memo.find(n); it != memo.end()) {
        return it->second;
      }
      auto const& d = nodes_[n];
      Rational v = q * self(self, d.lo) + mu.p() * self(self, d.hi);
      memo.emplace(n, v);
      return v;
    };
    return rec(rec, root);
  }

 private:
  static constexpr std::uint64_t terminal_var = ~std::uint64_t{0};

  struct Key {
    std::uint64_t var;
    Node lo;
    Node hi;
    friend bool operator==(Key const&, Key const&) = default;
  };
  struct KeyHash {
    std::size_t operator()(Key const& k) const noexcept {
      std::uint64_t h = k.var * 0x9E3779B97F4A7C15ULL;
      h ^= (static_cast<std::uint64_t>(k.lo) << 32 | k.hi) + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2);
      return static_cast<std::size_t>(h);
    }
  };

  Node apply(Node a, Node b, bool conj) {
    if (conj) {
      if (a == zero || b == zero) return zero;
      if (a == one) return b;
      if (b == one) return a;
    } else {
      if (a == one || b == one) return one;
      if (a == zero) return b;
      if (b == zero) return a;
    }
    if (a == b) {
      return a;
    }
    if (a > b) {
      std::swap(a, b);
    }
    auto& cache = conj ? and_cache_ : or_cache_;
    std::uint64_t const key = static_cast<std::uint64_t>(a) << 32 | b;
    if (auto it = cache.find(key); it != cache.end()) {
      return it->second;
    }
    NodeData const da = nodes_[a];
    NodeData const db = nodes_[b];
    std::uint64_t const v = std::min(da.var, db.var);
    Node const a_lo = da.var == v ? da.lo : a;
    Node const a_hi = da.var == v ? da.hi : a;
    Node const b_lo = db.var == v ? db.lo : b;
    Node const b_hi = db.var == v ? db.hi : b;
    Node const lo = apply(a_lo, b_lo, conj);
    Node const hi = apply(a_hi, b_hi, conj);
    Node const r = make(v, lo, hi);
    cache.emplace(key, r);
    return r;
  }

  std::size_t budget_;
  std::vector<NodeData> nodes_;
  std::unordered_map<Key, Node, KeyHash> unique_;
  std::unordered_map<std::uint64_t, Node> and_cache_;
  std::unordered_map<std::uint64_t, Node> or_cache_;
};

struct RankedCylinder {
  std::size_t root = 0;  // position of the diagram in the input list
  Pattern pattern;
  Rational measure;
};

/// Root-to-one paths of several diagrams in order of decreasing measure,
/// stopping after `limit`.  A partial path is ranked by the heaviest
/// completion below it, so each pop descends straight to a complete path;
/// ties go deeper first, then to the lower root position and smaller path.
inline std::vector<RankedCylinder> heaviest_cylinders(
    std::span<std::pair<Bdd const*, Bdd::Node> const> roots, BernoulliMeasure const& mu,
    std::size_t limit) {
  Rational const q = 1 - mu.p();
  std::vector<std::unordered_map<Bdd::Node, Rational>> best(roots.size());
  auto heaviest = [&](auto&& self, std::size_t r, Bdd::Node n) -> Rational {
    if (Bdd::terminal(n)) {
      return n == Bdd::one ? Rational(1) : Rational(0);
    }
    if (auto it = best[r].find(n); it != best[r].end()) {
      return it->second;
    }
    auto const& d = roots[r].first->node(n);
    Rational v = std::max(Rational(q * self(self, r, d.lo)), Rational(mu.p() * self(self, r, d.hi)));
    best[r].emplace(n, v);
    return v;
  };

  struct Partial {
    Rational priority;
    Rational measure;
    std::size_t root;
    std::vector<Pattern::Constraint> path;
    Bdd::Node node;
  };
  auto lighter = [](Partial const& a, Partial const& b) {
    if (a.priority != b.priority) return a.priority < b.priority;
    if (a.path.size() != b.path.size()) return a.path.size() < b.path.size();
    if (a.root != b.root) return a.root > b.root;
    return a.path > b.path;
  };
  std::priority_queue<Partial, std::vector<Partial>, decltype(lighter)> frontier(lighter);
  for (std::size_t r = 0; r < roots.size(); ++r) {
    if (roots[r].second != Bdd::zero) {
      frontier.push({heaviest(heaviest, r, roots[r].second), Rational(1), r, {}, roots[r].second});
    }
  }
  std::vector<RankedCylinder> out;
  while (!frontier.empty() && out.size() < limit) {
    Partial top = frontier.top();
    frontier.pop();
    if (top.node == Bdd::one) {
      out.push_back({top.root, Pattern::from_constraints(std::move(top.path)), top.measure});
      continue;
    }
    auto const& d = roots[top.root].first->node(top.node);
    for (bool bit : {false, true}) {
      Bdd::Node const child = bit ? d.hi : d.lo;
      if (child == Bdd::zero) {
        continue;
      }
      Rational m = top.measure * (bit ? mu.p() : q);
      Rational priority = m * heaviest(heaviest, top.root, child);
      Partial next{std::move(priority), std::move(m), top.root, top.path, child};
      next.path.emplace_back(d.var, bit);
      frontier.push(std::move(next));
    }
  }
  return out;
}

}  // namespace cergo
