#include "kge/optim.hpp"

#include <cmath>
#include <numbers>

#include "kge/error.hpp"
#include "kge/simd.hpp"

namespace kge {

AdamState AdamState::for_params(const EmbeddingState& p, AdamConfig config) {
  AdamState s;
  s.config = config;
  s.m_entities = Matrix(p.num_entities(), p.dim());
  s.v_entities = Matrix(p.num_entities(), p.dim());
  s.m_relations = Matrix(p.num_relations(), p.dim());
  s.v_relations = Matrix(p.num_relations(), p.dim());
  return s;
}

namespace {

void check_rows(const Matrix& params, const SparseRows& g) {
  if (g.ids.size() != g.values.rows() || (!g.ids.empty() && g.values.cols() != params.cols())) {
    throw ContractError("gradient rows do not match parameter width");
  }
  for (std::uint32_t id : g.ids)
    if (id >= params.rows()) throw ContractError("gradient row id out of range");
}

}  // namespace

void adam_step(EmbeddingState& params, AdamState& opt, const GradientBatch& g) {
  if (!opt.m_entities.same_shape(params.entities) || !opt.m_relations.same_shape(params.relations) ||
      !opt.v_entities.same_shape(params.entities) || !opt.v_relations.same_shape(params.relations)) {
    throw ContractError("optimizer state is not congruent with parameters");
  }
  check_rows(params.entities, g.entities);
  check_rows(params.relations, g.relations);

  ++opt.step;
  const auto t = static_cast<double>(opt.step);
  const simd::AdamCoeffs c{opt.config.lr,
                           opt.config.beta1,
                           opt.config.beta2,
                           opt.config.eps,
                           1.0 - std::pow(opt.config.beta1, t),
                           1.0 - std::pow(opt.config.beta2, t)};
  const auto& k = simd::kernels();
  for (std::size_t j = 0; j < g.entities.ids.size(); ++j) {
    const auto id = g.entities.ids[j];
    k.adam_update(params.entities.row(id), opt.m_entities.row(id), opt.v_entities.row(id),
                  g.entities.values.row(j), c);
  }
  for (std::size_t j = 0; j < g.relations.ids.size(); ++j) {
    const auto id = g.relations.ids[j];
    k.adam_update(params.relations.row(id), opt.m_relations.row(id), opt.v_relations.row(id),
                  g.relations.values.row(j), c);
  }
}

void sgd_step(EmbeddingState& params, double lr, const GradientBatch& g) {
  check_rows(params.entities, g.entities);
  check_rows(params.relations, g.relations);
  const auto& k = simd::kernels();
  for (std::size_t j = 0; j < g.entities.ids.size(); ++j)
    k.axpy(-lr, g.entities.values.row(j), params.entities.row(g.entities.ids[j]));
  for (std::size_t j = 0; j < g.relations.ids.size(); ++j)
    k.axpy(-lr, g.relations.values.row(j), params.relations.row(g.relations.ids[j]));
}

namespace {

void check_schedule(int epoch, int total, double defer_fraction, int cycles) {
  if (total < 1 || epoch < 0 || epoch >= total) throw ConfigError("cyclic_lr: epoch outside [0, total)");
  if (!(defer_fraction > 0.0 && defer_fraction < 1.0)) throw ConfigError("cyclic_lr: defer fraction must be in (0, 1)");
  if (cycles < 1) throw ConfigError("cyclic_lr: cycles must be >= 1");
}

// Position of `epoch` in the deferred region, or a negative value before it.
double deferred_position(int epoch, int total, double defer_fraction) {
  const double start = defer_fraction * total;
  if (epoch < start) return -1.0;
  return (epoch - start) / (total - start);
}

}  // namespace

double cyclic_lr(int epoch, int total, double defer_fraction, double base_lr, int cycles) {
  check_schedule(epoch, total, defer_fraction, cycles);
  const double u = deferred_position(epoch, total, defer_fraction);
  if (u < 0.0) return base_lr;
  const double x = u * cycles;
  const double frac = x - std::floor(x);
  return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * frac));
}

bool cyclic_cycle_end(int epoch, int total, double defer_fraction, int cycles) {
  check_schedule(epoch, total, defer_fraction, cycles);
  const double u = deferred_position(epoch, total, defer_fraction);
  if (u < 0.0) return false;
  if (epoch == total - 1) return true;
  const double u_next = deferred_position(epoch + 1, total, defer_fraction);
  return std::floor(u_next * cycles) > std::floor(u * cycles);
}

}  // namespace kge
