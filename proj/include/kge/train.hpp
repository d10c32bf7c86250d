#pragma once

// KvsAll mini-batch training with an optional ensemble strategy attached.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kge/ensemble.hpp"
#include "kge/eval.hpp"
#include "kge/kg.hpp"
#include "kge/model.hpp"
#include "kge/optim.hpp"

namespace kge {

enum class Strategy { kNone, kSwa, kAswa, kSnapE };

std::string_view to_string(Strategy s) noexcept;
Strategy parse_strategy(std::string_view s);

enum class OptimizerKind { kAdam, kSgd };

std::string_view to_string(OptimizerKind o) noexcept;
OptimizerKind parse_optimizer(std::string_view s);

struct TrainConfig {
  std::string dataset_dir;
  ModelKind model = ModelKind::kComplEx;
  std::size_t dim = 128;
  int epochs = 256;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double lr = 0.1;
  std::size_t batch_size = 1024;
  Strategy strategy = Strategy::kNone;
  int swa_start = 1;  // first epoch (1-based) absorbed by SWA
  std::uint64_t seed = 0;
  double smoothing = 0.0;
  std::size_t val_sample = 0;  // 0 = full validation split
  int val_every = 1;
  int snape_cycles = 5;
  double snape_defer = 0.5;
};

// Throws ConfigError for an invalid combination.
void validate(const TrainConfig& cfg);

struct EpochRow {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> val_running;
  std::optional<double> val_ensemble;
  std::string action;  // hard|soft|reject for ASWA, absorb for SWA, capture for SnapE
  double lr = 0.0;
};

struct TrainResult {
  EmbeddingState running;
  AdamState adam;
  std::optional<SwaState> swa;
  std::optional<AswaState> aswa;
  std::optional<SnapshotEnsemble> snapshots;
  std::vector<EpochRow> epochs;

  // Scorer for the strategy's final model: the ensemble when one exists,
  // otherwise the running model. Borrows from *this.
  std::unique_ptr<TailScorer> ensemble_scorer() const;
  bool has_ensemble() const noexcept { return swa || aswa || snapshots; }
};

using EpochCallback = std::function<void(const EpochRow&)>;

// Runs cfg.epochs epochs over the shuffled KvsAll keys of `d`. Throws
// DivergenceError if the loss becomes non-finite.
TrainResult train(const Dataset& d, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// `epoch,train_loss,val_mrr_running,val_mrr_ensemble,action,lr`
std::string metrics_csv(const std::vector<EpochRow>& rows);

}  // namespace kge
