#pragma once

#include <cstdint>

#include "kge/matrix.hpp"
#include "kge/model.hpp"

namespace kge {

struct AdamConfig {
  double lr = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

// Lazy Adam: moments of rows absent from a gradient batch are left alone;
// bias correction uses the global step count.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  Matrix m_entities, v_entities;
  Matrix m_relations, v_relations;

  static AdamState for_params(const EmbeddingState& params, AdamConfig config = {});

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

// Bias-corrected Adam on the rows present in `g`; step += 1.
// Throws ContractError on shape mismatch.
void adam_step(EmbeddingState& params, AdamState& opt, const GradientBatch& g);

// Plain gradient descent on touched rows.
void sgd_step(EmbeddingState& params, double lr, const GradientBatch& g);

// Deferred cyclic cosine schedule. Before defer_fraction * total it returns
// base_lr; afterwards, with u the position in [0, 1) within the deferred
// region, lr = base_lr / 2 * (1 + cos(pi * frac(u * cycles))).
// Throws ConfigError outside 0 <= epoch < total, 0 < defer_fraction < 1,
// cycles >= 1.
double cyclic_lr(int epoch, int total, double defer_fraction, double base_lr, int cycles);

// True when `epoch` is the last epoch of a cosine cycle, i.e. the point at
// which a snapshot is captured.
bool cyclic_cycle_end(int epoch, int total, double defer_fraction, int cycles);

}  // namespace kge
