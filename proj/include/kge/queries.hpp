#pragma once

// Multi-hop query generation and beam-search answering.
//
// Query shapes (anchors a_i, relations r_i, answer variable ?):
//   2p  a1 -r1-> V -r2-> ?
//   3p  a1 -r1-> V1 -r2-> V2 -r3-> ?
//   2i  a1 -r1-> ?  AND  a2 -r2-> ?
//   3i  a1 -r1-> ?  AND  a2 -r2-> ?  AND  a3 -r3-> ?
//   ip  (a1 -r1-> V  AND  a2 -r2-> V)  V -r3-> ?
//   pi  (a1 -r1-> V -r2-> ?)  AND  a2 -r3-> ?
//   2u  a1 -r1-> ?  OR  a2 -r2-> ?
//   up  (a1 -r1-> V  OR  a2 -r2-> V)  V -r3-> ?
//
// Atom truth values are sigmoid(logit). Conjunction uses a t-norm,
// disjunction its dual t-conorm, and existential variables take the maximum
// over the substitutions kept in a beam of the top-k entities.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "kge/eval.hpp"
#include "kge/kg.hpp"
#include "kge/scorer.hpp"

namespace kge {

enum class QueryType { k2p, k3p, k2i, k3i, kIp, kPi, k2u, kUp };

inline constexpr std::array<QueryType, 8> kAllQueryTypes{
    QueryType::k2p, QueryType::k3p, QueryType::k2i, QueryType::k3i,
    QueryType::kIp, QueryType::kPi, QueryType::k2u, QueryType::kUp,
};

std::string_view to_string(QueryType t) noexcept;
QueryType parse_query_type(std::string_view s);

struct QueryArity {
  std::size_t anchors;
  std::size_t relations;
};
QueryArity arity(QueryType t) noexcept;

struct Query {
  QueryType type = QueryType::k2p;
  std::vector<EntityId> anchors;
  std::vector<RelationId> relations;
  std::vector<EntityId> answers;  // sorted

  friend bool operator==(const Query&, const Query&) = default;
};

// Throws ContractError on arity mismatch or out-of-range ids.
void validate_query(const Query& q, std::size_t num_entities, std::size_t num_relations);

// Adjacency over the base relations of all three splits.
class QueryGraph {
 public:
  struct Edge {
    RelationId rel;
    EntityId other;
    friend auto operator<=>(const Edge&, const Edge&) = default;
  };

  explicit QueryGraph(const Dataset& d);

  std::size_t num_entities() const noexcept { return out_.size(); }
  std::span<const EntityId> tails(EntityId h, RelationId r) const { return index_.find({h, r}); }
  std::span<const Edge> out_edges(EntityId e) const { return out_[e]; }
  std::span<const Edge> in_edges(EntityId e) const { return in_[e]; }

 private:
  PairIndex index_;
  std::vector<std::vector<Edge>> out_;
  std::vector<std::vector<Edge>> in_;
};

// All entities satisfying the query pattern on the graph (sorted).
std::vector<EntityId> exact_answers(const QueryGraph& g, QueryType type, std::span<const EntityId> anchors,
                                    std::span<const RelationId> relations);

// `count` distinct queries of one type, sampled by random walks over the
// full graph. Deterministic in `seed`. Throws GenerationError after 1000
// consecutive attempts that fail to produce a new query.
std::vector<Query> generate_queries(const Dataset& d, QueryType type, std::size_t count, std::uint64_t seed);

enum class TNorm { kProduct, kGoedel };

TNorm parse_tnorm(std::string_view s);
std::string_view to_string(TNorm t) noexcept;

// product: a * b        goedel: min(a, b)
double t_norm(TNorm t, double a, double b) noexcept;
// product: a + b - a b  goedel: max(a, b)
double t_conorm(TNorm t, double a, double b) noexcept;

struct BeamConfig {
  std::size_t beam_width = 10;
  TNorm tnorm = TNorm::kProduct;
};

// Aggregated truth value of every entity as the answer. Throws ContractError
// for malformed queries or beam_width == 0.
std::vector<double> query_scores(const Query& q, const TailScorer& scorer, const BeamConfig& cfg);

struct RankedAnswer {
  EntityId entity;
  double score;
};

// Every entity, by descending score, ties by ascending id.
std::vector<RankedAnswer> answer_query(const Query& q, const TailScorer& scorer, const BeamConfig& cfg);

// Per-query outcome: the filtered rank of each gold answer (other golds
// removed from the candidate list).
std::vector<std::uint64_t> rank_query_answers(const Query& q, std::span<const double> scores);

// One report per query type present. Aggregates are macro-averaged: each
// query contributes the mean over its gold answers, and `n` counts queries.
// `ranks` lists every gold rank in query order.
std::map<QueryType, RankingReport> evaluate_queries(std::span<const Query> queries, const TailScorer& scorer,
                                                    const BeamConfig& cfg);

// {"type":"2p","anchors":[..],"relations":[..],"answers":[..]} per line.
void write_queries_jsonl(const std::filesystem::path& file, std::span<const Query> queries);
std::vector<Query> read_queries_jsonl(const std::filesystem::path& file);

}  // namespace kge
