#pragma once

// Parameter ensembles built during a single training run:
//   * SWA: incremental mean of the running parameters.
//   * ASWA: validation-gated averaging with hard, soft and rejected updates.
//   * SnapE: score ensemble of cyclic-LR snapshots, weighted by inverse
//     training loss.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "kge/model.hpp"
#include "kge/scorer.hpp"

namespace kge {

struct SwaState {
  EmbeddingState theta;
  std::uint64_t n_models = 0;
  int start_epoch = 1;
};

//   theta_swa <- (theta_swa * n + theta) / (n + 1),  n <- n + 1
// Throws ContractError if `theta` is not congruent with a non-empty state.
void swa_absorb(SwaState& s, const EmbeddingState& theta);

enum class AswaAction { kHard, kSoft, kReject };

std::string_view to_string(AswaAction a) noexcept;

struct AswaLogRow {
  int epoch = 0;
  double val_running = 0.0;
  std::optional<double> val_lookahead;  // absent after a hard update
  AswaAction action = AswaAction::kReject;
  double val_aswa = 0.0;
};

struct AswaState {
  EmbeddingState theta;
  std::uint64_t alpha_count = 0;  // members of the current running average
  double val_aswa = -1.0;
  std::vector<AswaLogRow> log;

  // Starts the ensemble at the initial parameters.
  static AswaState start(const EmbeddingState& theta0) { return {theta0, 0, -1.0, {}}; }
};

using Evaluator = std::function<double(const EmbeddingState&)>;

// One end-of-epoch ASWA decision for the new running parameters.
//   hard:   eval(theta_next) > val_aswa     -> adopt theta_next, alpha_count = 1
//   soft:   eval(lookahead) > val_aswa      -> adopt the look-ahead average
//   reject: otherwise                       -> ensemble untouched
// The look-ahead is (theta_aswa * alpha_count + theta_next) / (alpha_count + 1).
// Ties reject. Throws EvalError for a non-finite score.
AswaAction aswa_epoch_step(AswaState& a, int epoch, const EmbeddingState& theta_next,
                           const Evaluator& eval);

// Writes `epoch,val_running,val_lookahead,action,val_aswa`.
void write_aswa_log_csv(std::ostream& out, std::span<const AswaLogRow> log);

struct SnapshotEnsemble {
  std::vector<EmbeddingState> snapshots;
  std::vector<double> train_losses;
  std::vector<double> weights;  // normalized inverse losses

  bool empty() const noexcept { return snapshots.empty(); }
};

// Appends a snapshot and renormalizes weights. train_loss must be > 0.
void snape_capture(SnapshotEnsemble& ens, const EmbeddingState& theta, double train_loss);

// Normalized inverse-loss weights.
std::vector<double> inverse_loss_weights(std::span<const double> losses);

// sum_i w_i * score_all_tails(snapshot_i, h, r). Throws ContractError when empty.
void snape_score_all_tails(const SnapshotEnsemble& ens, EntityId h, RelationId r, std::span<double> out);
ScoreRow snape_score_all_tails(const SnapshotEnsemble& ens, EntityId h, RelationId r);

class SnapshotScorer final : public TailScorer {
 public:
  explicit SnapshotScorer(const SnapshotEnsemble& ens);

  std::size_t num_entities() const override { return ens_.snapshots.front().num_entities(); }
  std::size_t num_relations() const override { return ens_.snapshots.front().num_relations(); }
  void score_all_tails(EntityId h, RelationId r, std::span<double> out) const override {
    snape_score_all_tails(ens_, h, r, out);
  }

 private:
  const SnapshotEnsemble& ens_;
};

}  // namespace kge
