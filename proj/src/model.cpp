#include "kge/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kge/error.hpp"
#include "kge/rng.hpp"
#include "kge/simd.hpp"

namespace kge {

std::string_view to_string(ModelKind k) noexcept {
  switch (k) {
    case ModelKind::kDistMult:
      return "DistMult";
    case ModelKind::kComplEx:
      return "ComplEx";
    case ModelKind::kQMult:
      return "QMult";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "distmult") return ModelKind::kDistMult;
  if (lower == "complex") return ModelKind::kComplEx;
  if (lower == "qmult") return ModelKind::kQMult;
  throw ConfigError("unknown model '" + std::string(s) + "' (expected DistMult|ComplEx|QMult)");
}

namespace {

std::size_t components(ModelKind k) {
  switch (k) {
    case ModelKind::kDistMult:
      return 1;
    case ModelKind::kComplEx:
      return 2;
    case ModelKind::kQMult:
      return 4;
  }
  return 1;
}

void check_ids(const EmbeddingState& s, EntityId h, RelationId r) {
  if (h >= s.num_entities()) throw IndexError("entity id " + std::to_string(h) + " out of range");
  if (r >= s.num_relations()) throw IndexError("relation id " + std::to_string(r) + " out of range");
}

}  // namespace

void validate_dim(ModelKind kind, std::size_t d) {
  const std::size_t c = components(kind);
  if (d == 0 || d % c != 0) {
    throw ConfigError("embedding width " + std::to_string(d) + " is not a positive multiple of " +
                      std::to_string(c) + " for " + std::string(to_string(kind)));
  }
}

EmbeddingState init_embeddings(std::size_t num_entities, std::size_t num_relations, std::size_t d,
                               ModelKind kind, std::uint64_t seed) {
  validate_dim(kind, d);
  EmbeddingState s{kind, Matrix(num_entities, d), Matrix(num_relations, d)};
  const double bound = std::sqrt(6.0 / static_cast<double>(d));
  SplitMix64 rng(seed);
  for (double& x : s.entities.values()) x = (2.0 * rng.uniform() - 1.0) * bound;
  for (double& x : s.relations.values()) x = (2.0 * rng.uniform() - 1.0) * bound;
  return s;
}

void compose_query(ModelKind kind, std::span<const double> h, std::span<const double> r,
                   std::span<double> q) {
  const std::size_t d = q.size();
  switch (kind) {
    case ModelKind::kDistMult:
      for (std::size_t i = 0; i < d; ++i) q[i] = h[i] * r[i];
      return;
    case ModelKind::kComplEx: {
      const std::size_t n = d / 2;
      for (std::size_t i = 0; i < n; ++i) {
        const double hr = h[i], hi = h[n + i], rr = r[i], ri = r[n + i];
        q[i] = hr * rr - hi * ri;
        q[n + i] = hr * ri + hi * rr;
      }
      return;
    }
    case ModelKind::kQMult: {
      const std::size_t n = d / 4;
      for (std::size_t i = 0; i < n; ++i) {
        const double a1 = h[i], b1 = h[n + i], c1 = h[2 * n + i], d1 = h[3 * n + i];
        const double a2 = r[i], b2 = r[n + i], c2 = r[2 * n + i], d2 = r[3 * n + i];
        q[i] = a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2;
        q[n + i] = a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2;
        q[2 * n + i] = a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2;
        q[3 * n + i] = a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2;
      }
      return;
    }
  }
}

void compose_backward(ModelKind kind, std::span<const double> h, std::span<const double> r,
                      std::span<const double> g, std::span<double> gh, std::span<double> gr) {
  const std::size_t d = g.size();
  switch (kind) {
    case ModelKind::kDistMult:
      for (std::size_t i = 0; i < d; ++i) {
        gh[i] += g[i] * r[i];
        gr[i] += g[i] * h[i];
      }
      return;
    case ModelKind::kComplEx: {
      const std::size_t n = d / 2;
      for (std::size_t i = 0; i < n; ++i) {
        const double hr = h[i], hi = h[n + i], rr = r[i], ri = r[n + i];
        const double gre = g[i], gim = g[n + i];
        gh[i] += gre * rr + gim * ri;
        gh[n + i] += -gre * ri + gim * rr;
        gr[i] += gre * hr + gim * hi;
        gr[n + i] += -gre * hi + gim * hr;
      }
      return;
    }
    case ModelKind::kQMult: {
      const std::size_t n = d / 4;
      for (std::size_t i = 0; i < n; ++i) {
        const double a1 = h[i], b1 = h[n + i], c1 = h[2 * n + i], d1 = h[3 * n + i];
        const double a2 = r[i], b2 = r[n + i], c2 = r[2 * n + i], d2 = r[3 * n + i];
        const double g0 = g[i], g1 = g[n + i], g2 = g[2 * n + i], g3 = g[3 * n + i];
        gh[i] += g0 * a2 + g1 * b2 + g2 * c2 + g3 * d2;
        gh[n + i] += -g0 * b2 + g1 * a2 - g2 * d2 + g3 * c2;
        gh[2 * n + i] += -g0 * c2 + g1 * d2 + g2 * a2 - g3 * b2;
        gh[3 * n + i] += -g0 * d2 - g1 * c2 + g2 * b2 + g3 * a2;
        gr[i] += g0 * a1 + g1 * b1 + g2 * c1 + g3 * d1;
        gr[n + i] += -g0 * b1 + g1 * a1 + g2 * d1 - g3 * c1;
        gr[2 * n + i] += -g0 * c1 - g1 * d1 + g2 * a1 + g3 * b1;
        gr[3 * n + i] += -g0 * d1 + g1 * c1 - g2 * b1 + g3 * a1;
      }
      return;
    }
  }
}

double score_triple(const EmbeddingState& s, EntityId h, RelationId r, EntityId t) {
  check_ids(s, h, r);
  if (t >= s.num_entities()) throw IndexError("entity id " + std::to_string(t) + " out of range");
  std::vector<double> q(s.dim());
  compose_query(s.kind, s.entities.row(h), s.relations.row(r), q);
  return simd::kernels().dot(q, s.entities.row(t));
}

void score_all_tails(const EmbeddingState& s, EntityId h, RelationId r, std::span<double> out) {
  check_ids(s, h, r);
  if (out.size() != s.num_entities()) throw ContractError("score row length does not match |E|");
  std::vector<double> q(s.dim());
  compose_query(s.kind, s.entities.row(h), s.relations.row(r), q);
  simd::kernels().matvec(s.entities.values(), q, out);
}

ScoreRow score_all_tails(const EmbeddingState& s, EntityId h, RelationId r) {
  ScoreRow row(s.num_entities());
  score_all_tails(s, h, r, row);
  return row;
}

std::span<const double> SparseRows::row_for(std::uint32_t id) const {
  auto it = std::lower_bound(ids.begin(), ids.end(), id);
  if (it == ids.end() || *it != id) return {};
  return values.row(static_cast<std::size_t>(it - ids.begin()));
}

double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void check_batch(const EmbeddingState& s, std::span<const HrKey> batch, const PairIndex& labels,
                 double smoothing) {
  if (!(smoothing >= 0.0 && smoothing < 1.0)) throw ContractError("label smoothing must lie in [0, 1)");
  if (batch.empty()) throw ContractError("empty batch");
  for (const HrKey& k : batch) {
    if (!labels.contains(k)) {
      throw ContractError("batch key (" + std::to_string(k.head) + ", " + std::to_string(k.rel) +
                          ") has no labels");
    }
    check_ids(s, k.head, k.rel);
  }
}

// Fills `target` with the (optionally smoothed) multi-hot label row.
void label_row(std::span<const EntityId> tails, double smoothing, std::span<double> target) {
  const double off = smoothing / static_cast<double>(target.size());
  std::fill(target.begin(), target.end(), off);
  for (EntityId t : tails) target[t] = (1.0 - smoothing) + off;
}

}  // namespace

double kvsall_loss(const EmbeddingState& s, std::span<const HrKey> batch, const PairIndex& labels,
                   double smoothing) {
  check_batch(s, batch, labels, smoothing);
  const std::size_t ne = s.num_entities();
  std::vector<double> logits(ne), y(ne);
  double total = 0.0;
  for (const HrKey& k : batch) {
    score_all_tails(s, k.head, k.rel, logits);
    label_row(labels.find(k), smoothing, y);
    for (std::size_t t = 0; t < ne; ++t) total += softplus(logits[t]) - y[t] * logits[t];
  }
  return total / (static_cast<double>(batch.size()) * static_cast<double>(ne));
}

GradientBatch kvsall_loss_and_grad(const EmbeddingState& s, std::span<const HrKey> batch,
                                   const PairIndex& labels, double smoothing) {
  check_batch(s, batch, labels, smoothing);
  const auto& k = simd::kernels();
  const std::size_t ne = s.num_entities();
  const std::size_t d = s.dim();
  const double scale = 1.0 / (static_cast<double>(batch.size()) * static_cast<double>(ne));

  Matrix grad_e(ne, d);
  Matrix grad_r(s.num_relations(), d);
  std::vector<char> rel_touched(s.num_relations(), 0);
  std::vector<double> q(d), grad_q(d), logits(ne), y(ne), coef(ne);
  double total = 0.0;

  for (const HrKey& key : batch) {
    const auto h = s.entities.row(key.head);
    const auto r = s.relations.row(key.rel);
    compose_query(s.kind, h, r, q);
    k.matvec(s.entities.values(), q, logits);
    label_row(labels.find(key), smoothing, y);
    for (std::size_t t = 0; t < ne; ++t) {
      total += softplus(logits[t]) - y[t] * logits[t];
      coef[t] = (sigmoid(logits[t]) - y[t]) * scale;
    }
    // Tail side: d/de_t = coef_t * q. Query side: d/dq = sum_t coef_t e_t.
    k.rank1_update(grad_e.values(), coef, q);
    std::fill(grad_q.begin(), grad_q.end(), 0.0);
    k.matvec_t(s.entities.values(), coef, grad_q);
    compose_backward(s.kind, h, r, grad_q, grad_e.row(key.head), grad_r.row(key.rel));
    rel_touched[key.rel] = 1;
  }

  GradientBatch out;
  out.loss = total * scale;
  out.entities.ids.resize(ne);
  for (std::size_t i = 0; i < ne; ++i) out.entities.ids[i] = static_cast<std::uint32_t>(i);
  out.entities.values = std::move(grad_e);

  for (std::size_t i = 0; i < rel_touched.size(); ++i)
    if (rel_touched[i]) out.relations.ids.push_back(static_cast<std::uint32_t>(i));
  out.relations.values = Matrix(out.relations.ids.size(), d);
  for (std::size_t j = 0; j < out.relations.ids.size(); ++j) {
    const auto src = grad_r.row(out.relations.ids[j]);
    std::copy(src.begin(), src.end(), out.relations.values.row(j).begin());
  }
  return out;
}

}  // namespace kge
