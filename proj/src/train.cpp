#include "kge/train.hpp"

#include <cmath>
#include <sstream>

#include "kge/error.hpp"
#include "kge/rng.hpp"
#include "kge/scorer.hpp"

namespace kge {

std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::kNone: return "none";
    case Strategy::kSwa: return "swa";
    case Strategy::kAswa: return "aswa";
    case Strategy::kSnapE: return "snape";
  }
  return "?";
}

Strategy parse_strategy(std::string_view s) {
  if (s == "none") return Strategy::kNone;
  if (s == "swa") return Strategy::kSwa;
  if (s == "aswa") return Strategy::kAswa;
  if (s == "snape") return Strategy::kSnapE;
  throw ConfigError("unknown strategy '" + std::string(s) + "' (expected none|swa|aswa|snape)");
}

std::string_view to_string(OptimizerKind o) noexcept { return o == OptimizerKind::kAdam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "adam") return OptimizerKind::kAdam;
  if (s == "sgd") return OptimizerKind::kSgd;
  throw ConfigError("unknown optimizer '" + std::string(s) + "' (expected adam|sgd)");
}

void validate(const TrainConfig& cfg) {
  validate_dim(cfg.model, cfg.dim);
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(cfg.lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (cfg.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (cfg.swa_start < 1) throw ConfigError("swa start epoch must be >= 1");
  if (!(cfg.smoothing >= 0.0 && cfg.smoothing < 1.0)) throw ConfigError("label smoothing must lie in [0, 1)");
  if (cfg.val_every < 1) throw ConfigError("val-every must be >= 1");
  if (cfg.snape_cycles < 1) throw ConfigError("snape cycles must be >= 1");
  if (!(cfg.snape_defer > 0.0 && cfg.snape_defer < 1.0)) throw ConfigError("snape defer fraction must be in (0, 1)");
}

std::unique_ptr<TailScorer> TrainResult::ensemble_scorer() const {
  if (swa) return std::make_unique<ModelScorer>(swa->theta);
  if (aswa) return std::make_unique<ModelScorer>(aswa->theta);
  if (snapshots && !snapshots->empty()) return std::make_unique<SnapshotScorer>(*snapshots);
  return std::make_unique<ModelScorer>(running);
}

namespace {

// Distinct stream constants so shuffling, init and validation sampling do
// not share random numbers.
constexpr std::uint64_t kShuffleStream = 0x5348554646UL;
constexpr std::uint64_t kValStream = 0x56414C4944UL;

std::vector<Triple> validation_triples(const Dataset& d, const TrainConfig& cfg) {
  std::vector<Triple> val = d.valid;
  if (cfg.val_sample > 0 && cfg.val_sample < val.size()) {
    SplitMix64 rng(cfg.seed ^ kValStream);
    rng.shuffle(val);
    val.resize(cfg.val_sample);
  }
  return val;
}

}  // namespace

TrainResult train(const Dataset& d, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  validate(cfg);
  if (d.train.empty()) throw ConfigError("training split is empty");
  const KvsAllIndex labels = build_kvsall(d);
  const FilterIndex filter = build_filter(d);
  const std::size_t num_base = d.num_base_relations();
  const std::vector<Triple> val = validation_triples(d, cfg);

  TrainResult res;
  res.running = init_embeddings(d.num_entities(), d.num_relations_with_reciprocals(), cfg.dim, cfg.model, cfg.seed);
  res.adam = AdamState::for_params(res.running, AdamConfig{cfg.lr});

  const Evaluator evaluate = [&](const EmbeddingState& s) {
    if (val.empty()) return 0.0;
    return filtered_mrr(ModelScorer(s), val, filter, num_base);
  };

  switch (cfg.strategy) {
    case Strategy::kSwa:
      res.swa = SwaState{};
      res.swa->start_epoch = cfg.swa_start;
      break;
    case Strategy::kAswa:
      res.aswa = AswaState::start(res.running);
      break;
    case Strategy::kSnapE:
      res.snapshots = SnapshotEnsemble{};
      break;
    case Strategy::kNone:
      break;
  }

  std::vector<HrKey> keys = labels.keys();
  SplitMix64 shuffle_rng(cfg.seed ^ kShuffleStream);

  for (int e = 0; e < cfg.epochs; ++e) {
    EpochRow row;
    row.epoch = e + 1;
    row.lr = cfg.strategy == Strategy::kSnapE ? cyclic_lr(e, cfg.epochs, cfg.snape_defer, cfg.lr, cfg.snape_cycles)
                                              : cfg.lr;
    res.adam.config.lr = row.lr;

    shuffle_rng.shuffle(keys);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < keys.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, keys.size() - start);
      const std::span<const HrKey> batch(keys.data() + start, len);
      const GradientBatch g = kvsall_loss_and_grad(res.running, batch, labels, cfg.smoothing);
      if (!std::isfinite(g.loss)) throw DivergenceError(row.epoch, "training loss is not finite");
      loss_sum += g.loss * static_cast<double>(len);
      if (cfg.optimizer == OptimizerKind::kAdam) {
        adam_step(res.running, res.adam, g);
      } else {
        sgd_step(res.running, row.lr, g);
      }
    }
    row.train_loss = loss_sum / static_cast<double>(keys.size());
    if (!std::isfinite(row.train_loss)) throw DivergenceError(row.epoch, "training loss is not finite");

    const bool val_due = row.epoch % cfg.val_every == 0 || row.epoch == cfg.epochs;
    switch (cfg.strategy) {
      case Strategy::kNone:
        if (val_due) row.val_running = evaluate(res.running);
        break;
      case Strategy::kSwa:
        if (row.epoch >= cfg.swa_start) {
          swa_absorb(*res.swa, res.running);
          row.action = "absorb";
        }
        if (val_due) {
          row.val_running = evaluate(res.running);
          if (res.swa->n_models > 0) row.val_ensemble = evaluate(res.swa->theta);
        }
        break;
      case Strategy::kAswa:
        if (val_due) {
          const AswaAction a = aswa_epoch_step(*res.aswa, row.epoch, res.running, evaluate);
          row.action = std::string(to_string(a));
          row.val_running = res.aswa->log.back().val_running;
          row.val_ensemble = res.aswa->val_aswa;
        }
        break;
      case Strategy::kSnapE:
        if (cyclic_cycle_end(e, cfg.epochs, cfg.snape_defer, cfg.snape_cycles)) {
          snape_capture(*res.snapshots, res.running, row.train_loss);
          row.action = "capture";
        }
        if (val_due) {
          row.val_running = evaluate(res.running);
          if (!res.snapshots->empty() && !val.empty()) {
            row.val_ensemble = filtered_mrr(SnapshotScorer(*res.snapshots), val, filter, num_base);
          }
        }
        break;
    }
    res.epochs.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  return res;
}

std::string metrics_csv(const std::vector<EpochRow>& rows) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_loss,val_mrr_running,val_mrr_ensemble,action,lr\n";
  for (const EpochRow& r : rows) {
    out << r.epoch << ',' << r.train_loss << ',';
    if (r.val_running) out << *r.val_running;
    out << ',';
    if (r.val_ensemble) out << *r.val_ensemble;
    out << ',' << r.action << ',' << r.lr << '\n';
  }
  return out.str();
}

}  // namespace kge
