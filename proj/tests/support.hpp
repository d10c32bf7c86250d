#pragma once

// Helpers and independent reference implementations shared by the test
// binaries. Nothing here calls into the library code it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "kge/kg.hpp"
#include "kge/model.hpp"
#include "kge/queries.hpp"
#include "kge/scorer.hpp"

namespace kge::test {

inline std::vector<StringTriple> parse_triples(std::initializer_list<const char*> rows) {
  std::vector<StringTriple> out;
  for (const char* row : rows) {
    std::string s(row);
    const auto a = s.find(' ');
    const auto b = s.find(' ', a + 1);
    out.push_back({s.substr(0, a), s.substr(a + 1, b - a - 1), s.substr(b + 1)});
  }
  return out;
}

// Random closed-world KG with disjoint splits; entity and relation names are
// e<i> and r<i>. Every entity and relation is guaranteed to occur.
inline Dataset random_dataset(std::mt19937_64& rng, std::size_t ne, std::size_t nr, std::size_t ntriples) {
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> all;
  for (std::size_t e = 0; e < ne; ++e) {
    const std::tuple t{e, e % nr, (e + 1) % ne};
    if (seen.insert(t).second) all.push_back(t);
  }
  for (std::size_t r = 0; r < nr; ++r) {
    const std::tuple t{r % ne, r, (r + 2) % ne};
    if (seen.insert(t).second) all.push_back(t);
  }
  std::uniform_int_distribution<std::size_t> de(0, ne - 1), dr(0, nr - 1);
  for (std::size_t attempts = 0; all.size() < ntriples && attempts < 100 * ntriples; ++attempts) {
    const std::tuple t{de(rng), dr(rng), de(rng)};
    if (seen.insert(t).second) all.push_back(t);
  }
  std::vector<StringTriple> tr, va, te;
  std::uniform_int_distribution<int> split(0, 9);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto [h, r, t] = all[i];
    StringTriple s{"e" + std::to_string(h), "r" + std::to_string(r), "e" + std::to_string(t)};
    // The guaranteed-coverage triples stay in train so ids are dense in order.
    const int bucket = i < ne + nr ? 0 : split(rng);
    (bucket < 6 ? tr : bucket < 8 ? va : te).push_back(std::move(s));
  }
  return build_dataset(tr, va, te);
}

inline EmbeddingState random_state(std::mt19937_64& rng, ModelKind kind, std::size_t ne, std::size_t nr,
                                   std::size_t d, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  EmbeddingState s{kind, Matrix(ne, d), Matrix(nr, d)};
  for (double& x : s.entities.values()) x = u(rng);
  for (double& x : s.relations.values()) x = u(rng);
  return s;
}

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Scorer defined by an arbitrary function of the triple.
class FnScorer final : public TailScorer {
 public:
  FnScorer(std::size_t ne, std::size_t nr, std::function<double(EntityId, RelationId, EntityId)> f)
      : ne_(ne), nr_(nr), f_(std::move(f)) {}
  std::size_t num_entities() const override { return ne_; }
  std::size_t num_relations() const override { return nr_; }
  void score_all_tails(EntityId h, RelationId r, std::span<double> out) const override {
    for (EntityId t = 0; t < ne_; ++t) out[t] = f_(h, r, t);
  }

 private:
  std::size_t ne_, nr_;
  std::function<double(EntityId, RelationId, EntityId)> f_;
};

// Logit +10 for triples in the set (either stored direction), -10 otherwise.
inline FnScorer oracle_scorer(const Dataset& d) {
  std::set<Triple> known;
  const auto nb = static_cast<RelationId>(d.num_base_relations());
  for (const auto* split : {&d.train, &d.valid, &d.test})
    for (const Triple& t : *split) {
      known.insert(t);
      known.insert({t.tail, static_cast<RelationId>(t.rel + nb), t.head});
    }
  return FnScorer(d.num_entities(), 2 * nb,
                  [known](EntityId h, RelationId r, EntityId t) { return known.contains({h, r, t}) ? 10.0 : -10.0; });
}

// Naive filtered rank: walk every candidate, no sorting or spans.
inline std::uint64_t naive_rank(const std::vector<double>& scores, EntityId gold, const std::set<EntityId>& known) {
  std::uint64_t better = 0, equal = 0;
  for (EntityId e = 0; e < scores.size(); ++e) {
    if (e == gold || known.count(e)) continue;
    if (scores[e] > scores[gold]) ++better;
    if (scores[e] == scores[gold]) ++equal;
  }
  return 1 + better + equal / 2;
}

// Exhaustive query semantics: every variable ranges over all entities.
// Mirrors the fuzzy-logic definition directly by nested loops.
inline std::vector<double> exhaustive_query_scores(const Query& q, const TailScorer& s, TNorm tn) {
  const std::size_t n = s.num_entities();
  auto atom = [&](EntityId h, RelationId r) {
    std::vector<double> v(n);
    s.score_all_tails(h, r, v);
    for (double& x : v) x = 1.0 / (1.0 + std::exp(-x));
    return v;
  };
  auto T = [&](double a, double b) { return tn == TNorm::kProduct ? a * b : std::min(a, b); };
  auto S = [&](double a, double b) { return tn == TNorm::kProduct ? a + b - a * b : std::max(a, b); };
  const auto& a = q.anchors;
  const auto& r = q.relations;
  std::vector<double> out(n, 0.0);
  switch (q.type) {
    case QueryType::k2p: {
      const auto x = atom(a[0], r[0]);
      for (EntityId v = 0; v < n; ++v) {
        const auto y = atom(v, r[1]);
        for (EntityId e = 0; e < n; ++e) out[e] = std::max(out[e], T(x[v], y[e]));
      }
      break;
    }
    case QueryType::k3p: {
      const auto x = atom(a[0], r[0]);
      for (EntityId v1 = 0; v1 < n; ++v1) {
        const auto y = atom(v1, r[1]);
        for (EntityId v2 = 0; v2 < n; ++v2) {
          const auto z = atom(v2, r[2]);
          for (EntityId e = 0; e < n; ++e) out[e] = std::max(out[e], T(T(x[v1], y[v2]), z[e]));
        }
      }
      break;
    }
    case QueryType::k2i: {
      const auto x = atom(a[0], r[0]), y = atom(a[1], r[1]);
      for (EntityId e = 0; e < n; ++e) out[e] = T(x[e], y[e]);
      break;
    }
    case QueryType::k3i: {
      const auto x = atom(a[0], r[0]), y = atom(a[1], r[1]), z = atom(a[2], r[2]);
      for (EntityId e = 0; e < n; ++e) out[e] = T(T(x[e], y[e]), z[e]);
      break;
    }
    case QueryType::kIp: {
      const auto x = atom(a[0], r[0]), y = atom(a[1], r[1]);
      for (EntityId v = 0; v < n; ++v) {
        const auto z = atom(v, r[2]);
        for (EntityId e = 0; e < n; ++e) out[e] = std::max(out[e], T(T(x[v], y[v]), z[e]));
      }
      break;
    }
    case QueryType::kPi: {
      const auto x = atom(a[0], r[0]), w = atom(a[1], r[2]);
      std::vector<double> chain(n, 0.0);
      for (EntityId v = 0; v < n; ++v) {
        const auto y = atom(v, r[1]);
        for (EntityId e = 0; e < n; ++e) chain[e] = std::max(chain[e], T(x[v], y[e]));
      }
      for (EntityId e = 0; e < n; ++e) out[e] = T(chain[e], w[e]);
      break;
    }
    case QueryType::k2u: {
      const auto x = atom(a[0], r[0]), y = atom(a[1], r[1]);
      for (EntityId e = 0; e < n; ++e) out[e] = S(x[e], y[e]);
      break;
    }
    case QueryType::kUp: {
      const auto x = atom(a[0], r[0]), y = atom(a[1], r[1]);
      for (EntityId v = 0; v < n; ++v) {
        const auto z = atom(v, r[2]);
        for (EntityId e = 0; e < n; ++e) out[e] = std::max(out[e], T(S(x[v], y[v]), z[e]));
      }
      break;
    }
  }
  return out;
}

// Hard answers by brute force over triples (no adjacency index).
inline std::vector<EntityId> brute_answers(const Dataset& d, const Query& q) {
  std::set<Triple> g;
  for (const auto* split : {&d.train, &d.valid, &d.test}) g.insert(split->begin(), split->end());
  const auto n = static_cast<EntityId>(d.num_entities());
  auto holds = [&](EntityId h, RelationId r, EntityId t) { return g.contains({h, r, t}); };
  const auto& a = q.anchors;
  const auto& r = q.relations;
  std::vector<EntityId> out;
  for (EntityId e = 0; e < n; ++e) {
    bool ok = false;
    switch (q.type) {
      case QueryType::k2p:
        for (EntityId v = 0; v < n && !ok; ++v) ok = holds(a[0], r[0], v) && holds(v, r[1], e);
        break;
      case QueryType::k3p:
        for (EntityId v = 0; v < n && !ok; ++v)
          for (EntityId w = 0; w < n && !ok; ++w) ok = holds(a[0], r[0], v) && holds(v, r[1], w) && holds(w, r[2], e);
        break;
      case QueryType::k2i: ok = holds(a[0], r[0], e) && holds(a[1], r[1], e); break;
      case QueryType::k3i: ok = holds(a[0], r[0], e) && holds(a[1], r[1], e) && holds(a[2], r[2], e); break;
      case QueryType::kIp:
        for (EntityId v = 0; v < n && !ok; ++v) ok = holds(a[0], r[0], v) && holds(a[1], r[1], v) && holds(v, r[2], e);
        break;
      case QueryType::kPi:
        for (EntityId v = 0; v < n && !ok; ++v) ok = holds(a[0], r[0], v) && holds(v, r[1], e);
        ok = ok && holds(a[1], r[2], e);
        break;
      case QueryType::k2u: ok = holds(a[0], r[0], e) || holds(a[1], r[1], e); break;
      case QueryType::kUp:
        for (EntityId v = 0; v < n && !ok; ++v) ok = (holds(a[0], r[0], v) || holds(a[1], r[1], v)) && holds(v, r[2], e);
        break;
    }
    if (ok) out.push_back(e);
  }
  return out;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("kge_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  f << s;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace kge::test
