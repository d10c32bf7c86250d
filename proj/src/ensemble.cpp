#include "kge/ensemble.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "kge/error.hpp"
#include "kge/simd.hpp"

namespace kge {

namespace {

// dst <- (dst * n + src) / (n + 1) over both parameter tables.
void running_mean(EmbeddingState& dst, const EmbeddingState& src, double n) {
  const auto& k = simd::kernels();
  k.running_mean(dst.entities.values(), src.entities.values(), n);
  k.running_mean(dst.relations.values(), src.relations.values(), n);
}

}  // namespace

void swa_absorb(SwaState& s, const EmbeddingState& theta) {
  if (s.n_models == 0) {
    s.theta = theta;
    s.n_models = 1;
    return;
  }
  if (!s.theta.congruent(theta)) throw ContractError("swa_absorb: snapshot shape differs from the average");
  running_mean(s.theta, theta, static_cast<double>(s.n_models));
  ++s.n_models;
}

std::string_view to_string(AswaAction a) noexcept {
  switch (a) {
    case AswaAction::kHard:
      return "hard";
    case AswaAction::kSoft:
      return "soft";
    case AswaAction::kReject:
      return "reject";
  }
  return "?";
}

AswaAction aswa_epoch_step(AswaState& a, int epoch, const EmbeddingState& theta_next, const Evaluator& eval) {
  if (!a.theta.congruent(theta_next)) throw ContractError("aswa_epoch_step: parameter shapes differ");
  const double val_running = eval(theta_next);
  if (!std::isfinite(val_running)) throw EvalError("non-finite validation score for the running model");

  AswaLogRow row;
  row.epoch = epoch;
  row.val_running = val_running;
  if (val_running > a.val_aswa) {
    a.theta = theta_next;
    a.alpha_count = 1;
    a.val_aswa = val_running;
    row.action = AswaAction::kHard;
    row.val_aswa = a.val_aswa;
    a.log.push_back(row);
    return row.action;
  }

  EmbeddingState lookahead = a.theta;
  running_mean(lookahead, theta_next, static_cast<double>(a.alpha_count));
  const double val_lookahead = eval(lookahead);
  if (!std::isfinite(val_lookahead)) throw EvalError("non-finite validation score for the look-ahead ensemble");
  row.val_lookahead = val_lookahead;
  if (val_lookahead > a.val_aswa) {
    a.theta = std::move(lookahead);
    ++a.alpha_count;
    a.val_aswa = val_lookahead;
    row.action = AswaAction::kSoft;
  } else {
    row.action = AswaAction::kReject;
  }
  row.val_aswa = a.val_aswa;
  a.log.push_back(row);
  return row.action;
}

void write_aswa_log_csv(std::ostream& out, std::span<const AswaLogRow> log) {
  out << "epoch,val_running,val_lookahead,action,val_aswa\n";
  std::ostringstream line;
  line.precision(17);
  for (const auto& r : log) {
    line.str({});
    line << r.epoch << ',' << r.val_running << ',';
    if (r.val_lookahead) line << *r.val_lookahead;
    line << ',' << to_string(r.action) << ',' << r.val_aswa << '\n';
    out << line.str();
  }
}

std::vector<double> inverse_loss_weights(std::span<const double> losses) {
  std::vector<double> w(losses.size());
  double total = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    w[i] = 1.0 / losses[i];
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

void snape_capture(SnapshotEnsemble& ens, const EmbeddingState& theta, double train_loss) {
  if (!(train_loss > 0.0) || !std::isfinite(train_loss)) throw ContractError("snapshot training loss must be positive");
  if (!ens.empty() && !ens.snapshots.front().congruent(theta)) {
    throw ContractError("snapshot shape differs from the ensemble");
  }
  ens.snapshots.push_back(theta);
  ens.train_losses.push_back(train_loss);
  ens.weights = inverse_loss_weights(ens.train_losses);
}

void snape_score_all_tails(const SnapshotEnsemble& ens, EntityId h, RelationId r, std::span<double> out) {
  if (ens.empty()) throw ContractError("snapshot ensemble is empty");
  std::vector<double> row(out.size());
  std::fill(out.begin(), out.end(), 0.0);
  const auto& k = simd::kernels();
  for (std::size_t i = 0; i < ens.snapshots.size(); ++i) {
    kge::score_all_tails(ens.snapshots[i], h, r, row);
    k.axpy(ens.weights[i], row, out);
  }
}

ScoreRow snape_score_all_tails(const SnapshotEnsemble& ens, EntityId h, RelationId r) {
  if (ens.empty()) throw ContractError("snapshot ensemble is empty");
  ScoreRow out(ens.snapshots.front().num_entities());
  snape_score_all_tails(ens, h, r, out);
  return out;
}

SnapshotScorer::SnapshotScorer(const SnapshotEnsemble& ens) : ens_(ens) {
  if (ens_.empty()) throw ContractError("snapshot ensemble is empty");
}

}  // namespace kge
