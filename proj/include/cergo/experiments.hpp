// SPDX-License-Identifier: Apache-2.0

// Experiment runner: JSON configs in, CSV tables or JSON reports out.
// Configuration keys are documented in README.md.

#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cergo/cantor.hpp"
#include "cergo/error.hpp"
#include "cergo/foelner.hpp"
#include "cergo/group.hpp"
#include "cergo/growth.hpp"
#include "cergo/kucera.hpp"
#include "cergo/rational.hpp"

namespace cergo {

using Json = nlohmann::ordered_json;

namespace config {

inline Json const* find(Json const& j, std::string_view key) {
  if (!j.is_object()) {
    return nullptr;
  }
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline Json const& require(Json const& j, std::string_view key) {
  if (auto const* v = find(j, key)) {
    return *v;
  }
  throw validation_error("missing config key '" + std::string(key) + "'");
}

inline std::uint64_t as_u64(Json const& v, std::string_view what) {
  if (v.is_number_unsigned()) {
    return v.get<std::uint64_t>();
  }
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  throw validation_error("'" + std::string(what) + "' must be a nonnegative integer");
}

inline std::uint64_t get_u64(Json const& j, std::string_view key, std::uint64_t fallback) {
  auto const* v = find(j, key);
  return v ? as_u64(*v, key) : fallback;
}

inline std::int64_t as_i64(Json const& v, std::string_view what) {
  if (v.is_number_integer()) {
    return v.get<std::int64_t>();
  }
  throw validation_error("'" + std::string(what) + "' must be an integer");
}

/// Strings ("1/3", "0.25") or JSON numbers, read through their text.
inline Rational as_rational(Json const& v, std::string_view what) {
  if (v.is_string()) {
    return parse_rational(v.get<std::string>());
  }
  if (v.is_number()) {
    return parse_rational(v.dump());
  }
  throw validation_error("'" + std::string(what) + "' must be a rational number");
}

inline std::string get_string(Json const& j, std::string_view key, std::string fallback) {
  auto const* v = find(j, key);
  if (!v) {
    return fallback;
  }
  if (!v->is_string()) {
    throw validation_error("'" + std::string(key) + "' must be a string");
  }
  return v->get<std::string>();
}

/// Sets a dotted path ("schedule.kind", "points.0.seed") to a value given as
/// JSON text, or as a plain string when it does not parse.
inline void apply_override(Json& root, std::string const& assignment) {
  auto const eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw validation_error("override must look like key=value: '" + assignment + "'");
  }
  std::string const path = assignment.substr(0, eq);
  std::string const text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) {
    value = text;
  }
  Json* node = &root;
  std::size_t start = 0;
  for (;;) {
    auto const dot = path.find('.', start);
    std::string const part = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) {
      throw validation_error("empty segment in override path '" + path + "'");
    }
    Json* next = nullptr;
    if (node->is_array()) {
      std::size_t index = 0;
      try {
        index = std::stoul(part);
      } catch (std::logic_error const&) {
        throw validation_error("override path '" + path + "' indexes an array with '" + part + "'");
      }
      if (index >= node->size()) {
        throw validation_error("override path '" + path + "' is out of range");
      }
      next = &(*node)[index];
    } else {
      if (node->is_null()) {
        *node = Json::object();
      }
      if (!node->is_object()) {
        throw validation_error("override path '" + path + "' runs through a scalar");
      }
      next = &(*node)[part];
    }
    node = next;
    if (dot == std::string::npos) {
      break;
    }
    start = dot + 1;
  }
  *node = std::move(value);
}

inline Json load(std::string const& path, std::vector<std::string> const& overrides = {}) {
  std::ifstream in(path);
  if (!in) {
    throw validation_error("cannot read config '" + path + "'");
  }
  Json root = Json::parse(in, nullptr, false);
  if (root.is_discarded() || !root.is_object()) {
    throw validation_error("config '" + path + "' is not a JSON object");
  }
  for (auto const& o : overrides) {
    apply_override(root, o);
  }
  return root;
}

inline GroupSpec parse_group(Json const& cfg) {
  Json const& g = require(cfg, "group");
  std::string const kind = get_string(g, "kind", "lattice");
  if (kind == "heisenberg") {
    return GroupSpec::heisenberg();
  }
  if (kind != "lattice") {
    throw validation_error("unknown group kind '" + kind + "'");
  }
  std::uint64_t const d = get_u64(g, "dimension", 1);
  std::string const gens = get_string(g, "generators", "unit_vectors");
  GeneratorChoice choice = GeneratorChoice::unit_vectors;
  if (gens == "diagonal") {
    choice = GeneratorChoice::diagonal;
  } else if (gens != "unit_vectors") {
    throw validation_error("unknown generating set '" + gens + "'");
  }
  return GroupSpec::lattice(static_cast<std::size_t>(d), choice);
}

/// [x, y, ...] coordinates or {"code": c}.
inline GroupElement parse_element(Json const& v, Group const& group) {
  if (v.is_array()) {
    std::vector<std::int64_t> xs;
    for (auto const& x : v) {
      xs.push_back(as_i64(x, "coordinate"));
    }
    return group.encode(Coordinates(std::span<std::int64_t const>(xs)));
  }
  if (auto const* c = find(v, "code")) {
    GroupElement g{as_u64(*c, "code")};
    (void)group.decode(g);
    return g;
  }
  throw validation_error("group elements are coordinate arrays or {\"code\": n}");
}

/// A 0/1 word (prefix cylinder) or a list of {"at": [...]} / {"code": c}
/// entries with a "bit".
inline Pattern parse_pattern(Json const& v, Group const& group) {
  if (v.is_string()) {
    return Pattern::prefix(v.get<std::string>());
  }
  if (!v.is_array()) {
    throw validation_error("patterns are 0/1 words or lists of constraints");
  }
  std::vector<Pattern::Constraint> cs;
  for (auto const& c : v) {
    std::uint64_t code = 0;
    if (auto const* at = find(c, "at")) {
      code = parse_element(*at, group).code;
    } else {
      code = parse_element(c, group).code;
    }
    std::uint64_t const bit = as_u64(require(c, "bit"), "bit");
    if (bit > 1) {
      throw validation_error("pattern bits are 0 or 1");
    }
    cs.emplace_back(code, bit == 1);
  }
  try {
    return Pattern::from_constraints(std::move(cs));
  } catch (domain_error const& e) {
    throw validation_error(e.what());
  }
}

inline Observable parse_observable(Json const& cfg, Group const& group) {
  Json const& o = require(cfg, "observable");
  std::string const kind = get_string(o, "kind", "indicator");
  if (kind == "indicator") {
    return Observable::indicator(parse_pattern(require(o, "pattern"), group));
  }
  if (kind == "constant") {
    return Observable::constant(as_rational(require(o, "value"), "value"));
  }
  if (kind != "steps") {
    throw validation_error("unknown observable kind '" + kind + "'");
  }
  std::optional<Rational> bound;
  if (auto const* b = find(o, "bound")) {
    bound = as_rational(*b, "bound");
  }
  std::vector<StepFunction> stages;
  Json const& list = require(o, "stages");
  if (!list.is_array()) {
    throw validation_error("'stages' must be a list");
  }
  for (auto const& stage : list) {
    StepFunction step;
    for (auto const& piece : stage) {
      step.push_back({parse_pattern(require(piece, "pattern"), group),
                      as_rational(require(piece, "value"), "value")});
    }
    stages.push_back(std::move(step));
  }
  return Observable(std::move(stages), std::move(bound));
}

inline BernoulliMeasure parse_measure(Json const& cfg) {
  return BernoulliMeasure(as_rational(require(require(cfg, "measure"), "p"), "measure.p"));
}

inline std::string schedule_kind(Json const& cfg) {
  auto const* s = find(cfg, "schedule");
  return s ? get_string(*s, "kind", "balls") : std::string("balls");
}

inline FoelnerSchedule parse_schedule_node(Json const* s, Group const& group) {
  std::string const kind = s ? get_string(*s, "kind", "balls") : std::string("balls");
  if (kind == "balls") {
    return FoelnerSchedule::balls(group);
  }
  if (kind == "dyadic") {
    return FoelnerSchedule::dyadic_balls(group);
  }
  if (kind == "searched") {
    return FoelnerSchedule::searched(group, get_u64(*s, "index_cap", default_index_cap));
  }
  if (kind == "explicit") {
    std::vector<FiniteGroupSet> sets;
    for (auto const& set : require(*s, "sets")) {
      std::vector<GroupElement> xs;
      for (auto const& x : set) {
        xs.push_back(x.is_number() ? GroupElement{as_u64(x, "code")} : parse_element(x, group));
      }
      sets.push_back(FiniteGroupSet::from_elements(std::move(xs)));
    }
    return FoelnerSchedule::explicit_sets(group, std::move(sets));
  }
  if (kind == "tempered") {
    auto const base = parse_schedule_node(find(*s, "base"), group);
    auto const count = get_u64(*s, "count", 4);
    auto result = temper(base, count, get_u64(*s, "horizon", default_temper_horizon));
    return result.schedule;
  }
  throw validation_error("unknown schedule kind '" + kind + "'");
}

inline FoelnerSchedule parse_schedule(Json const& cfg, Group const& group) {
  return parse_schedule_node(find(cfg, "schedule"), group);
}

/// "n": [..] or "n_range": {"from", "to", "step"}.
inline std::vector<std::uint64_t> parse_ns(Json const& cfg, std::uint64_t from, std::uint64_t to) {
  std::vector<std::uint64_t> ns;
  if (auto const* list = find(cfg, "n")) {
    if (!list->is_array()) {
      ns.push_back(as_u64(*list, "n"));
      return ns;
    }
    for (auto const& n : *list) {
      ns.push_back(as_u64(n, "n"));
    }
    return ns;
  }
  std::uint64_t step = 1;
  if (auto const* r = find(cfg, "n_range")) {
    from = get_u64(*r, "from", from);
    to = get_u64(*r, "to", to);
    step = get_u64(*r, "step", 1);
  }
  if (step == 0 || from > to) {
    throw validation_error("n_range needs from <= to and step >= 1");
  }
  for (std::uint64_t n = from; n <= to; n += step) {
    ns.push_back(n);
  }
  return ns;
}

/// "points": [{"seed": s} | {"bits": "0110", "fill": 0}]; without it a
/// single seeded point from "seed".
inline std::vector<PointSource> parse_points(Json const& cfg, Rational const& p) {
  std::vector<PointSource> points;
  auto const* list = find(cfg, "points");
  if (!list) {
    points.push_back(PointSource::seeded(get_u64(cfg, "seed", 0), p));
    return points;
  }
  if (!list->is_array() || list->empty()) {
    throw validation_error("'points' must be a nonempty list");
  }
  for (auto const& pt : *list) {
    if (auto const* seed = find(pt, "seed")) {
      Rational const q = find(pt, "p") ? as_rational(pt["p"], "p") : p;
      points.push_back(PointSource::seeded(as_u64(*seed, "seed"), q));
    } else if (auto const* bits = find(pt, "bits")) {
      if (!bits->is_string()) {
        throw validation_error("'bits' must be a 0/1 string");
      }
      points.push_back(
          PointSource::explicit_bits(bits->get<std::string>(), get_u64(pt, "fill", 0) == 1));
    } else {
      throw validation_error("a point needs 'seed' or 'bits'");
    }
  }
  return points;
}

inline std::size_t workers(Json const& cfg) {
  return static_cast<std::size_t>(std::max<std::uint64_t>(1, get_u64(cfg, "workers", 1)));
}

}  // namespace config

namespace detail {

inline std::string coordinates_string(Group const& group, GroupElement g) {
  auto const x = group.decode(g);
  std::string s;
  for (std::size_t i = 0; i < x.size; ++i) {
    s += (i ? " " : "") + std::to_string(x[i]);
  }
  return s;
}

inline Json exact(Rational const& q) {
  Json j;
  j["numerator"] = q.get_num().get_str();
  j["denominator"] = q.get_den().get_str();
  return j;
}

}  // namespace detail

/// Rows (n, point) of exact ergodic averages against the exact integral.
inline std::string run_birkhoff(Json const& cfg) {
  if (config::find(cfg, "function")) {
    throw validation_error(
        "group-side functions are limsup probes only and cannot drive a Birkhoff run");
  }
  Group const group(config::parse_group(cfg));
  BernoulliMeasure const mu = config::parse_measure(cfg);
  Observable const f = config::parse_observable(cfg, group);
  if (!f.bounded() && config::schedule_kind(cfg) != "balls") {
    throw validation_error(
        "an observable without a bound needs the balls schedule (pointwise convergence over "
        "general tempered sequences assumes bounded f)");
  }
  auto const schedule = config::parse_schedule(cfg, group);
  std::size_t const stage = config::get_u64(cfg, "stage", f.last_stage());
  if (stage >= f.stage_count()) {
    throw validation_error("observable stage " + std::to_string(stage) + " does not exist");
  }
  auto const points = config::parse_points(cfg, mu.p());
  auto const ns = config::parse_ns(cfg, 1, 10);
  std::size_t const workers = config::workers(cfg);
  ShiftAction const action(group);
  Rational const target = f.integral(stage, mu);

  std::ostringstream out;
  out << "point,n,set_size,average,average_decimal,target,target_decimal,abs_error,"
         "abs_error_decimal\n";
  for (auto n : ns) {
    auto const set = schedule.set(n);
    for (auto const& w : points) {
      Rational const avg = ergodic_average(f, w, set, action, stage, workers);
      Rational const err = abs(Rational(avg - target));
      out << w.describe() << ',' << n << ',' << set.size() << ',' << rational_string(avg) << ','
          << decimal_string(avg) << ',' << rational_string(target) << ','
          << decimal_string(target) << ',' << rational_string(err) << ',' << decimal_string(err)
          << '\n';
    }
  }
  return out.str();
}

/// n, |B(n)| by breadth-first search, the closed form, |B(n)|/n^d.
inline std::string run_growth(Json const& cfg) {
  GroupSpec const spec = config::parse_group(cfg);
  Group const group(spec);
  std::uint64_t const upto = config::get_u64(cfg, "upto", 10);
  std::uint64_t const degree =
      config::get_u64(cfg, "degree", spec.kind == GroupKind::heisenberg ? 4 : spec.dimension);
  auto const formula = ball_count_formula(spec);
  std::ostringstream out;
  out << "n,ball_size,closed_form,ratio,ratio_decimal\n";
  for (std::uint64_t n = 0; n <= upto; ++n) {
    std::uint64_t const size = group.ball_size(n);
    out << n << ',' << size << ',' << formula(n).get_str() << ',';
    if (n > 0) {
      Integer denom;
      mpz_ui_pow_ui(denom.get_mpz_t(), n, degree);
      Rational const ratio = make_rational(to_integer(size), denom);
      out << rational_string(ratio) << ',' << decimal_string(ratio);
    } else {
      out << ',';
    }
    out << '\n';
  }
  return out.str();
}

struct FoelnerReport {
  std::string defects;
  std::string temper_trace;
};

inline FoelnerReport run_foelner_report(Json const& cfg) {
  Group const group(config::parse_group(cfg));
  auto const schedule = config::parse_schedule(cfg, group);
  std::uint64_t const upto = config::get_u64(cfg, "upto", 8);
  std::vector<GroupElement> elements;
  if (auto const* list = config::find(cfg, "test_elements")) {
    for (auto const& x : *list) {
      elements.push_back(config::parse_element(x, group));
    }
  } else {
    elements = group.generators();
  }

  std::ostringstream d;
  d << "n,set_size,element,coordinates,left_defect,left_decimal,right_defect,right_decimal,"
       "ball_bound,within_bound\n";
  auto const radial = schedule.is_balls() ? schedule.radial() : std::nullopt;
  for (auto const& r : verify_foelner(schedule, elements, upto)) {
    auto const size = schedule.set(r.n).size();
    d << r.n << ',' << size << ',' << r.element.code << ','
      << detail::coordinates_string(group, r.element) << ',' << rational_string(r.left_defect)
      << ',' << decimal_string(r.left_defect) << ',' << rational_string(r.right_defect) << ','
      << decimal_string(r.right_defect) << ',';
    if (radial) {
      Integer const inner = radial->count(to_integer(r.n));
      Integer const outer = radial->count(to_integer(r.n + group.word_norm(r.element)));
      Rational const bound = make_rational(Integer(outer - inner), inner);
      bool const ok = r.left_defect <= bound && r.right_defect <= bound;
      d << rational_string(bound) << ',' << (ok ? "true" : "false");
    } else {
      d << ',';
    }
    d << '\n';
  }

  std::ostringstream t;
  t << "i,n_i,union_size,symmetric_difference,set_size,evaluations,tempered_union,"
       "tempered_ok\n";
  std::uint64_t const count = config::get_u64(cfg, "temper_count", 4);
  if (count > 0) {
    Rational const c =
        config::find(cfg, "tempered_C") ? config::as_rational(cfg["tempered_C"], "tempered_C")
                                        : Rational(2);
    auto const result =
        temper(schedule, count, config::get_u64(cfg, "temper_horizon", default_temper_horizon));
    auto const check = is_tempered(result.schedule, count, c);
    for (auto const& s : result.trace) {
      t << s.i << ',' << s.n.get_str() << ',' << s.union_size.get_str() << ','
        << s.symmetric_difference.get_str() << ',' << s.set_size.get_str() << ','
        << s.evaluations << ',';
      if (s.i >= 2 && s.i - 2 < check.rows.size()) {
        auto const& row = check.rows[s.i - 2];
        bool const ok = Rational(row.union_size) < c * Rational(row.set_size);
        t << row.union_size.get_str() << ',' << (ok ? "true" : "false");
      } else {
        t << ',';
      }
      t << '\n';
    }
  }
  return {d.str(), t.str()};
}

inline Json run_kucera(Json const& cfg) {
  Group const group(config::parse_group(cfg));
  BernoulliMeasure const mu = config::parse_measure(cfg);
  auto const schedule = config::parse_schedule(cfg, group);
  KuceraConfig kc(schedule, mu, config::as_rational(config::require(cfg, "q"), "q"),
                  config::get_u64(cfg, "depth", 3));
  kc.truncation = config::get_u64(cfg, "truncation", default_truncation);
  kc.horizon = config::get_u64(cfg, "horizon", default_find_horizon);
  kc.node_budget = config::get_u64(cfg, "node_budget", default_node_budget);
  kc.workers = config::workers(cfg);
  if (kc.truncation == 0) {
    throw validation_error("truncation must be at least 1");
  }
  std::vector<Pattern> patterns;
  for (auto const& p : config::require(cfg, "open_set")) {
    patterns.push_back(config::parse_pattern(p, group));
  }
  auto const report = run_tower(EffectivelyOpenSet::finite(std::move(patterns)), kc);

  Json j;
  j["group"] = group.spec().name();
  j["p"] = rational_string(mu.p());
  j["q"] = rational_string(kc.q);
  j["schedule"] = schedule.describe();
  j["depth"] = kc.depth;
  j["truncation"] = kc.truncation;
  j["levels"] = Json::array();
  for (auto const& level : report.levels) {
    Json l;
    l["k"] = level.k;
    l["pattern_count"] = level.patterns.size();
    l["truncated"] = level.truncated;
    l["measure"] = detail::exact(level.full_measure);
    l["measure_decimal"] = decimal_string(level.full_measure);
    l["carried_measure"] = detail::exact(level.measure_upper);
    l["bound"] = detail::exact(level.decay_bound);
    l["bound_decimal"] = decimal_string(level.decay_bound);
    l["step_bound"] = detail::exact(level.step_bound);
    l["pass"] = level.decay_ok && level.step_ok;
    l["diagram_nodes"] = level.diagram_nodes;
    l["pieces"] = Json::array();
    for (auto const& p : level.pieces) {
      Json pj;
      pj["i"] = p.i;
      pj["n"] = p.n;
      pj["set_size"] = p.set_size;
      pj["deviation_squared"] = rational_string(p.deviation_squared);
      pj["pattern_measure"] = rational_string(p.pattern_measure);
      pj["piece_measure"] = rational_string(p.piece_measure);
      pj["bound"] = rational_string(p.bound);
      pj["pass"] = p.within_bound;
      l["pieces"].push_back(std::move(pj));
    }
    l["patterns"] = Json::array();
    for (auto const& p : level.patterns) {
      l["patterns"].push_back(p.to_string());
    }
    j["levels"].push_back(std::move(l));
  }
  j["test_levels"] = Json::array();
  for (auto const& [m, k] : report.test_levels) {
    j["test_levels"].push_back(Json{{"m", m}, {"k", k}});
  }
  j["pass"] = report.all_ok;
  return j;
}

inline std::string run_limsup(Json const& cfg) {
  Group const group(config::parse_group(cfg));
  std::vector<LimsupRow> rows;
  GroupElement h = group.generators().back();
  if (auto const* s = config::find(cfg, "shift")) {
    h = config::parse_element(*s, group);
  }
  auto const ns = config::parse_ns(cfg, 1, 10);
  if (auto const* fn = config::find(cfg, "function")) {
    if (!fn->is_string() || fn->get<std::string>() != "limsup_counterexample") {
      throw validation_error("the only group-side function is 'limsup_counterexample'");
    }
    auto const schedule = config::find(cfg, "schedule")
                               ? config::parse_schedule(cfg, group)
                               : FoelnerSchedule::dyadic_balls(group);
    rows = limsup_probe_group(limsup_counterexample(group), schedule, h, ns);
  } else {
    BernoulliMeasure const mu = config::parse_measure(cfg);
    Observable const f = config::parse_observable(cfg, group);
    if (!f.bounded() && config::schedule_kind(cfg) != "balls") {
      throw validation_error(
          "an observable without a bound needs the balls schedule: limsup invariance fails for "
          "general Foelner sequences");
    }
    auto const schedule = config::parse_schedule(cfg, group);
    auto const points = config::parse_points(cfg, mu.p());
    std::size_t const stage = config::get_u64(cfg, "stage", f.last_stage());
    rows = limsup_invariance_probe(f, points.front(), schedule, h, ns, ShiftAction(group), stage);
  }
  std::ostringstream out;
  out << "n,set_size,average,average_decimal,shifted_average,shifted_decimal,difference,"
         "difference_decimal,bound,within_bound\n";
  for (auto const& r : rows) {
    Rational const diff = r.shifted_average - r.average;
    out << r.n << ',' << r.size << ',' << rational_string(r.average) << ','
        << decimal_string(r.average) << ',' << rational_string(r.shifted_average) << ','
        << decimal_string(r.shifted_average) << ',' << rational_string(diff) << ','
        << decimal_string(diff) << ',';
    if (r.bound) {
      out << rational_string(*r.bound) << ',' << (abs(diff) <= *r.bound ? "true" : "false");
    } else {
      out << ',';
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace cergo
