#pragma once

// Multilinear scoring functions (DistMult, ComplEx, QMult), the KvsAll
// all-tails forward pass, and analytic BCE gradients.
//
// Every model scores a triple as <compose(e_h, w_r), e_t>, where compose is
// an elementwise product (DistMult), a complex product (ComplEx, layout
// [re | im]) or a Hamilton product (QMult, layout [1 | i | j | k]). Scoring
// all tails is then one matrix-vector product over the entity table.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "kge/kg.hpp"
#include "kge/matrix.hpp"

namespace kge {

enum class ModelKind : std::uint32_t { kDistMult = 0, kComplEx = 1, kQMult = 2 };

std::string_view to_string(ModelKind k) noexcept;
ModelKind parse_model_kind(std::string_view s);

// Throws ConfigError unless d > 0 and divisible by the model's component count.
void validate_dim(ModelKind kind, std::size_t d);

struct EmbeddingState {
  ModelKind kind = ModelKind::kDistMult;
  Matrix entities;   // |E| x d
  Matrix relations;  // |R'| x d

  std::size_t dim() const noexcept { return entities.cols(); }
  std::size_t num_entities() const noexcept { return entities.rows(); }
  std::size_t num_relations() const noexcept { return relations.rows(); }

  bool congruent(const EmbeddingState& o) const noexcept {
    return kind == o.kind && entities.same_shape(o.entities) && relations.same_shape(o.relations);
  }

  friend bool operator==(const EmbeddingState&, const EmbeddingState&) = default;
};

using ScoreRow = std::vector<double>;

// Uniform on [-sqrt(6/d), sqrt(6/d)] from a splitmix64 stream seeded by `seed`.
EmbeddingState init_embeddings(std::size_t num_entities, std::size_t num_relations, std::size_t d,
                               ModelKind kind, std::uint64_t seed);

// q = compose(e_h, w_r); the score of (h, r, t) is <q, e_t>.
void compose_query(ModelKind kind, std::span<const double> head, std::span<const double> rel,
                   std::span<double> q);

// Backpropagates dL/dq into dL/de_h and dL/dw_r (accumulating).
void compose_backward(ModelKind kind, std::span<const double> head, std::span<const double> rel,
                      std::span<const double> grad_q, std::span<double> grad_head,
                      std::span<double> grad_rel);

double score_triple(const EmbeddingState& s, EntityId h, RelationId r, EntityId t);

void score_all_tails(const EmbeddingState& s, EntityId h, RelationId r, std::span<double> out);
ScoreRow score_all_tails(const EmbeddingState& s, EntityId h, RelationId r);

// Gradient rows for the parameters touched by one batch.
struct SparseRows {
  std::vector<std::uint32_t> ids;  // ascending
  Matrix values;                   // ids.size() x d

  std::span<const double> row_for(std::uint32_t id) const;  // empty if untouched
};

struct GradientBatch {
  double loss = 0.0;
  SparseRows entities;
  SparseRows relations;
};

// Mean binary cross-entropy of sigmoid(score_all_tails(h, r)) against the
// multi-hot label row of every key, averaged over entities then keys, with
// optional label smoothing y' = y (1 - s) + s / |E|. Throws ContractError for
// a key missing from `labels` or smoothing outside [0, 1).
GradientBatch kvsall_loss_and_grad(const EmbeddingState& s, std::span<const HrKey> batch,
                                   const PairIndex& labels, double smoothing = 0.0);

// Same loss without gradients.
double kvsall_loss(const EmbeddingState& s, std::span<const HrKey> batch, const PairIndex& labels,
                   double smoothing = 0.0);

// Numerically stable log(1 + exp(x)).
double softplus(double x) noexcept;
double sigmoid(double x) noexcept;

}  // namespace kge
