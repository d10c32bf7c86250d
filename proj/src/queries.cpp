#include "kge/queries.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <tuple>

#include <json.hpp>

#include "kge/error.hpp"
#include "kge/model.hpp"
#include "kge/rng.hpp"

namespace kge {

std::string_view to_string(QueryType t) noexcept {
  switch (t) {
    case QueryType::k2p: return "2p";
    case QueryType::k3p: return "3p";
    case QueryType::k2i: return "2i";
    case QueryType::k3i: return "3i";
    case QueryType::kIp: return "ip";
    case QueryType::kPi: return "pi";
    case QueryType::k2u: return "2u";
    case QueryType::kUp: return "up";
  }
  return "?";
}

QueryType parse_query_type(std::string_view s) {
  for (QueryType t : kAllQueryTypes)
    if (to_string(t) == s) return t;
  throw ConfigError("unknown query type '" + std::string(s) + "'");
}

QueryArity arity(QueryType t) noexcept {
  switch (t) {
    case QueryType::k2p: return {1, 2};
    case QueryType::k3p: return {1, 3};
    case QueryType::k2i: return {2, 2};
    case QueryType::k3i: return {3, 3};
    case QueryType::kIp: return {2, 3};
    case QueryType::kPi: return {2, 3};
    case QueryType::k2u: return {2, 2};
    case QueryType::kUp: return {2, 3};
  }
  return {0, 0};
}

void validate_query(const Query& q, std::size_t num_entities, std::size_t num_relations) {
  const QueryArity a = arity(q.type);
  if (q.anchors.size() != a.anchors || q.relations.size() != a.relations) {
    throw ContractError(std::string("query of type ") + std::string(to_string(q.type)) + " needs " +
                        std::to_string(a.anchors) + " anchors and " + std::to_string(a.relations) + " relations");
  }
  for (EntityId e : q.anchors)
    if (e >= num_entities) throw ContractError("query anchor out of range");
  for (RelationId r : q.relations)
    if (r >= num_relations) throw ContractError("query relation out of range");
  for (EntityId e : q.answers)
    if (e >= num_entities) throw ContractError("query answer out of range");
}

// ---------------------------------------------------------------- graph

QueryGraph::QueryGraph(const Dataset& d) : out_(d.num_entities()), in_(d.num_entities()) {
  for (const auto* split : {&d.train, &d.valid, &d.test}) {
    for (const Triple& t : *split) {
      index_.insert({t.head, t.rel}, t.tail);
      out_[t.head].push_back({t.rel, t.tail});
      in_[t.tail].push_back({t.rel, t.head});
    }
  }
  index_.finalize();
  for (auto* adj : {&out_, &in_}) {
    for (auto& edges : *adj) {
      std::sort(edges.begin(), edges.end());
      edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    }
  }
}

namespace {

using EntitySet = std::vector<EntityId>;  // sorted, unique

EntitySet project(const QueryGraph& g, const EntitySet& from, RelationId r) {
  EntitySet out;
  for (EntityId e : from) {
    const auto t = g.tails(e, r);
    out.insert(out.end(), t.begin(), t.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

EntitySet intersect(const EntitySet& a, const EntitySet& b) {
  EntitySet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

EntitySet unite(const EntitySet& a, const EntitySet& b) {
  EntitySet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

std::vector<EntityId> exact_answers(const QueryGraph& g, QueryType type, std::span<const EntityId> a,
                                    std::span<const RelationId> r) {
  const QueryArity ar = arity(type);
  if (a.size() != ar.anchors || r.size() != ar.relations) throw ContractError("query arity mismatch");
  auto atom = [&](std::size_t i, std::size_t j) { return project(g, {a[i]}, r[j]); };
  switch (type) {
    case QueryType::k2p: return project(g, atom(0, 0), r[1]);
    case QueryType::k3p: return project(g, project(g, atom(0, 0), r[1]), r[2]);
    case QueryType::k2i: return intersect(atom(0, 0), atom(1, 1));
    case QueryType::k3i: return intersect(intersect(atom(0, 0), atom(1, 1)), atom(2, 2));
    case QueryType::kIp: return project(g, intersect(atom(0, 0), atom(1, 1)), r[2]);
    case QueryType::kPi: return intersect(project(g, atom(0, 0), r[1]), atom(1, 2));
    case QueryType::k2u: return unite(atom(0, 0), atom(1, 1));
    case QueryType::kUp: return project(g, unite(atom(0, 0), atom(1, 1)), r[2]);
  }
  return {};
}

// ----------------------------------------------------------- generation

namespace {

using Edge = QueryGraph::Edge;

struct Pattern {
  std::vector<EntityId> anchors;
  std::vector<RelationId> relations;
};

class Sampler {
 public:
  Sampler(const QueryGraph& g, std::uint64_t seed) : g_(g), rng_(seed) {}

  EntityId entity() { return static_cast<EntityId>(rng_.below(g_.num_entities())); }

  std::optional<Edge> pick(std::span<const Edge> edges) {
    if (edges.empty()) return std::nullopt;
    return edges[rng_.below(edges.size())];
  }

  // `k` distinct edges from `edges`, or nullopt if there are fewer.
  std::optional<std::vector<Edge>> pick_distinct(std::span<const Edge> edges, std::size_t k) {
    if (edges.size() < k) return std::nullopt;
    std::vector<std::size_t> idx(edges.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates over the first k slots.
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng_.below(idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    std::vector<Edge> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(edges[idx[i]]);
    return out;
  }

  // A random triple (head, rel, tail) of the graph, found via a random head.
  std::optional<Triple> triple() {
    const EntityId h = entity();
    const auto e = pick(g_.out_edges(h));
    if (!e) return std::nullopt;
    return Triple{h, e->rel, e->other};
  }

  std::optional<Pattern> sample(QueryType type) {
    switch (type) {
      case QueryType::k2p:
      case QueryType::k3p: {
        const std::size_t hops = type == QueryType::k2p ? 2 : 3;
        Pattern p;
        EntityId cur = entity();
        p.anchors.push_back(cur);
        for (std::size_t i = 0; i < hops; ++i) {
          const auto e = pick(g_.out_edges(cur));
          if (!e) return std::nullopt;
          p.relations.push_back(e->rel);
          cur = e->other;
        }
        return p;
      }
      case QueryType::k2i:
      case QueryType::k3i: {
        const std::size_t k = type == QueryType::k2i ? 2 : 3;
        const auto branches = pick_distinct(g_.in_edges(entity()), k);
        if (!branches) return std::nullopt;
        Pattern p;
        for (const Edge& b : *branches) {
          p.anchors.push_back(b.other);
          p.relations.push_back(b.rel);
        }
        return p;
      }
      case QueryType::kIp: {
        const auto last = pick(g_.in_edges(entity()));
        if (!last) return std::nullopt;
        const auto branches = pick_distinct(g_.in_edges(last->other), 2);
        if (!branches) return std::nullopt;
        return Pattern{{(*branches)[0].other, (*branches)[1].other},
                       {(*branches)[0].rel, (*branches)[1].rel, last->rel}};
      }
      case QueryType::kPi: {
        const auto branches = pick_distinct(g_.in_edges(entity()), 2);
        if (!branches) return std::nullopt;
        const Edge hop = (*branches)[0];
        const Edge direct = (*branches)[1];
        const auto first = pick(g_.in_edges(hop.other));
        if (!first) return std::nullopt;
        return Pattern{{first->other, direct.other}, {first->rel, hop.rel, direct.rel}};
      }
      case QueryType::k2u: {
        const auto t1 = triple();
        const auto t2 = triple();
        if (!t1 || !t2 || (t1->head == t2->head && t1->rel == t2->rel)) return std::nullopt;
        return Pattern{{t1->head, t2->head}, {t1->rel, t2->rel}};
      }
      case QueryType::kUp: {
        const auto last = pick(g_.in_edges(entity()));
        if (!last) return std::nullopt;
        const auto first = pick(g_.in_edges(last->other));
        const auto other = triple();
        if (!first || !other || (first->other == other->head && first->rel == other->rel)) return std::nullopt;
        return Pattern{{first->other, other->head}, {first->rel, other->rel, last->rel}};
      }
    }
    return std::nullopt;
  }

 private:
  const QueryGraph& g_;
  SplitMix64 rng_;
};

constexpr int kMaxFailedAttempts = 1000;

}  // namespace

std::vector<Query> generate_queries(const Dataset& d, QueryType type, std::size_t count, std::uint64_t seed) {
  if (d.num_entities() == 0) throw GenerationError("empty dataset");
  const QueryGraph g(d);
  Sampler sampler(g, seed);
  std::set<std::pair<std::vector<EntityId>, std::vector<RelationId>>> seen;
  std::vector<Query> out;
  int failures = 0;
  while (out.size() < count) {
    auto p = sampler.sample(type);
    if (p && seen.emplace(p->anchors, p->relations).second) {
      auto answers = exact_answers(g, type, p->anchors, p->relations);
      if (!answers.empty()) {
        out.push_back({type, std::move(p->anchors), std::move(p->relations), std::move(answers)});
        failures = 0;
        continue;
      }
    }
    if (++failures >= kMaxFailedAttempts) {
      throw GenerationError("could not instantiate " + std::to_string(count) + " distinct " +
                            std::string(to_string(type)) + " queries (got " + std::to_string(out.size()) + ")");
    }
  }
  return out;
}

// ------------------------------------------------------------- answering

TNorm parse_tnorm(std::string_view s) {
  if (s == "product" || s == "prod") return TNorm::kProduct;
  if (s == "goedel" || s == "godel" || s == "min") return TNorm::kGoedel;
  throw ConfigError("unknown t-norm '" + std::string(s) + "' (expected product|goedel)");
}

std::string_view to_string(TNorm t) noexcept { return t == TNorm::kProduct ? "product" : "goedel"; }

double t_norm(TNorm t, double a, double b) noexcept { return t == TNorm::kProduct ? a * b : std::min(a, b); }

double t_conorm(TNorm t, double a, double b) noexcept {
  return t == TNorm::kProduct ? a + b - a * b : std::max(a, b);
}

namespace {

class BeamAnswerer {
 public:
  BeamAnswerer(const TailScorer& scorer, const BeamConfig& cfg)
      : scorer_(scorer), cfg_(cfg), ne_(scorer.num_entities()) {}

  // Truth value of (from, r, e) for every e.
  std::vector<double> atom(EntityId from, RelationId r) const {
    std::vector<double> v(ne_);
    scorer_.score_all_tails(from, r, v);
    for (double& x : v) x = sigmoid(x);
    return v;
  }

  std::vector<double> conj(std::vector<double> a, const std::vector<double>& b) const {
    for (std::size_t i = 0; i < ne_; ++i) a[i] = t_norm(cfg_.tnorm, a[i], b[i]);
    return a;
  }

  std::vector<double> disj(std::vector<double> a, const std::vector<double>& b) const {
    for (std::size_t i = 0; i < ne_; ++i) a[i] = t_conorm(cfg_.tnorm, a[i], b[i]);
    return a;
  }

  // Binds an existential variable to its top-k entities, then follows r:
  // out[e] = max over kept v of T(var[v], atom(v, r)[e]).
  std::vector<double> hop(const std::vector<double>& var, RelationId r) const {
    std::vector<double> out(ne_, 0.0);
    for (EntityId v : top_k(var)) {
      const auto next = atom(v, r);
      for (std::size_t e = 0; e < ne_; ++e) out[e] = std::max(out[e], t_norm(cfg_.tnorm, var[v], next[e]));
    }
    return out;
  }

 private:
  std::vector<EntityId> top_k(const std::vector<double>& s) const {
    std::vector<EntityId> idx(ne_);
    std::iota(idx.begin(), idx.end(), EntityId{0});
    const std::size_t k = std::min(cfg_.beam_width, ne_);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](EntityId x, EntityId y) { return s[x] > s[y] || (s[x] == s[y] && x < y); });
    idx.resize(k);
    return idx;
  }

  const TailScorer& scorer_;
  const BeamConfig& cfg_;
  std::size_t ne_;
};

}  // namespace

std::vector<double> query_scores(const Query& q, const TailScorer& scorer, const BeamConfig& cfg) {
  validate_query(q, scorer.num_entities(), scorer.num_relations());
  if (cfg.beam_width == 0) throw ContractError("beam width must be >= 1");
  const BeamAnswerer b(scorer, cfg);
  const auto& a = q.anchors;
  const auto& r = q.relations;
  switch (q.type) {
    case QueryType::k2p: return b.hop(b.atom(a[0], r[0]), r[1]);
    case QueryType::k3p: return b.hop(b.hop(b.atom(a[0], r[0]), r[1]), r[2]);
    case QueryType::k2i: return b.conj(b.atom(a[0], r[0]), b.atom(a[1], r[1]));
    case QueryType::k3i: return b.conj(b.conj(b.atom(a[0], r[0]), b.atom(a[1], r[1])), b.atom(a[2], r[2]));
    case QueryType::kIp: return b.hop(b.conj(b.atom(a[0], r[0]), b.atom(a[1], r[1])), r[2]);
    case QueryType::kPi: return b.conj(b.hop(b.atom(a[0], r[0]), r[1]), b.atom(a[1], r[2]));
    case QueryType::k2u: return b.disj(b.atom(a[0], r[0]), b.atom(a[1], r[1]));
    case QueryType::kUp: return b.hop(b.disj(b.atom(a[0], r[0]), b.atom(a[1], r[1])), r[2]);
  }
  return {};
}

std::vector<RankedAnswer> answer_query(const Query& q, const TailScorer& scorer, const BeamConfig& cfg) {
  const auto scores = query_scores(q, scorer, cfg);
  std::vector<RankedAnswer> out;
  out.reserve(scores.size());
  for (std::size_t e = 0; e < scores.size(); ++e) out.push_back({static_cast<EntityId>(e), scores[e]});
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedAnswer& x, const RankedAnswer& y) { return x.score > y.score; });
  return out;
}

std::vector<std::uint64_t> rank_query_answers(const Query& q, std::span<const double> scores) {
  std::vector<std::uint64_t> ranks;
  ranks.reserve(q.answers.size());
  std::vector<EntityId> others;
  for (EntityId gold : q.answers) {
    others.clear();
    for (EntityId e : q.answers)
      if (e != gold) others.push_back(e);
    ranks.push_back(filtered_rank(scores, gold, others));
  }
  return ranks;
}

std::map<QueryType, RankingReport> evaluate_queries(std::span<const Query> queries, const TailScorer& scorer,
                                                    const BeamConfig& cfg) {
  struct Acc {
    double rr = 0, h1 = 0, h3 = 0, h10 = 0;
    std::size_t n = 0;
    std::vector<std::uint64_t> ranks;
  };
  std::map<QueryType, Acc> acc;
  for (const Query& q : queries) {
    if (q.answers.empty()) throw ContractError("query without gold answers");
    const auto ranks = rank_query_answers(q, query_scores(q, scorer, cfg));
    const RankingReport per = summarize_ranks(ranks);
    Acc& a = acc[q.type];
    a.rr += per.mrr;
    a.h1 += per.hits1;
    a.h3 += per.hits3;
    a.h10 += per.hits10;
    ++a.n;
    a.ranks.insert(a.ranks.end(), ranks.begin(), ranks.end());
  }
  std::map<QueryType, RankingReport> out;
  for (auto& [type, a] : acc) {
    RankingReport r;
    const auto n = static_cast<double>(a.n);
    r.mrr = a.rr / n;
    r.hits1 = a.h1 / n;
    r.hits3 = a.h3 / n;
    r.hits10 = a.h10 / n;
    r.n = a.n;
    r.ranks = std::move(a.ranks);
    out.emplace(type, std::move(r));
  }
  return out;
}

// ------------------------------------------------------------------ I/O

void write_queries_jsonl(const std::filesystem::path& file, std::span<const Query> queries) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  for (const Query& q : queries) {
    nlohmann::ordered_json j;
    j["type"] = std::string(to_string(q.type));
    j["anchors"] = q.anchors;
    j["relations"] = q.relations;
    j["answers"] = q.answers;
    out << j.dump() << '\n';
  }
}

std::vector<Query> read_queries_jsonl(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::vector<Query> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Query q;
      q.type = parse_query_type(j.at("type").get<std::string>());
      q.anchors = j.at("anchors").get<std::vector<EntityId>>();
      q.relations = j.at("relations").get<std::vector<RelationId>>();
      q.answers = j.at("answers").get<std::vector<EntityId>>();
      std::sort(q.answers.begin(), q.answers.end());
      q.answers.erase(std::unique(q.answers.begin(), q.answers.end()), q.answers.end());
      const QueryArity a = arity(q.type);
      if (q.anchors.size() != a.anchors || q.relations.size() != a.relations) {
        throw ParseError(file.string(), lineno, "anchor/relation arity does not match query type");
      }
      out.push_back(std::move(q));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(file.string(), lineno, e.what());
    } catch (const ConfigError& e) {
      throw ParseError(file.string(), lineno, e.what());
    }
  }
  return out;
}

}  // namespace kge
