#pragma once

// Binary checkpoint envelope, little-endian throughout:
//
//   "KGEC"  u32 version  u32 model_kind  u64 |E|  u64 |R'|  u64 d
//   f64[|E| * d] entity table   f64[|R'| * d] relation table
//   sections*: char[4] tag, u64 payload bytes, payload
//
// Sections:
//   "ADAM"  u64 step, f64 lr, beta1, beta2, eps, then m_E, v_E, m_R, v_R
//   "ENSB"  u32 kind (0 swa, 1 aswa, 2 snape), u64 count, f64 val_aswa,
//           and for snape: u64 n, f64 weights[n], f64 losses[n], followed by
//           the entity and relation tables of snapshots 1..n-1 (snapshot 0
//           is the envelope's main tables)
//
// Unknown section tags are skipped on read.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "kge/ensemble.hpp"
#include "kge/model.hpp"
#include "kge/optim.hpp"

namespace kge {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class EnsembleKind : std::uint32_t { kSwa = 0, kAswa = 1, kSnapE = 2 };

struct EnsembleSection {
  EnsembleKind kind = EnsembleKind::kSwa;
  std::uint64_t count = 0;  // n_models, alpha_count, or number of snapshots
  double val_aswa = -1.0;
  std::vector<double> weights;
  std::vector<double> losses;
  std::vector<EmbeddingState> extra_snapshots;  // snapshots 1..n-1

  friend bool operator==(const EnsembleSection&, const EnsembleSection&) = default;
};

struct Checkpoint {
  EmbeddingState model;
  std::optional<AdamState> adam;
  std::optional<EnsembleSection> ensemble;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c);
// Throws CompatError on bad magic, version, or truncated / inconsistent data.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& file);
Checkpoint load_checkpoint(const std::filesystem::path& file);

Checkpoint swa_checkpoint(const SwaState& s);
Checkpoint aswa_checkpoint(const AswaState& a);
Checkpoint snape_checkpoint(const SnapshotEnsemble& e);
// Rebuilds the snapshot list of a snape checkpoint.
SnapshotEnsemble snapshots_from_checkpoint(const Checkpoint& c);

}  // namespace kge
