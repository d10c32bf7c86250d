#pragma once

#include <cstddef>
#include <span>

#include "kge/kg.hpp"
#include "kge/model.hpp"

namespace kge {

// Anything that can score every entity as the tail of (h, r, ?).
class TailScorer {
 public:
  virtual ~TailScorer() = default;
  virtual std::size_t num_entities() const = 0;
  virtual std::size_t num_relations() const = 0;
  virtual void score_all_tails(EntityId h, RelationId r, std::span<double> out) const = 0;
};

class ModelScorer final : public TailScorer {
 public:
  explicit ModelScorer(const EmbeddingState& state) : state_(state) {}

  std::size_t num_entities() const override { return state_.num_entities(); }
  std::size_t num_relations() const override { return state_.num_relations(); }
  void score_all_tails(EntityId h, RelationId r, std::span<double> out) const override {
    kge::score_all_tails(state_, h, r, out);
  }

 private:
  const EmbeddingState& state_;
};

}  // namespace kge
