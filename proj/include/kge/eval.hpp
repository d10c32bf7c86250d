#pragma once

// Filtered link-prediction ranking and MRR / Hits@k aggregation.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kge/kg.hpp"
#include "kge/scorer.hpp"

namespace kge {

struct RankingReport {
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  std::vector<std::uint64_t> ranks;
  std::size_t n = 0;

  friend bool operator==(const RankingReport&, const RankingReport&) = default;
};

// Aggregates a list of ranks.
RankingReport summarize_ranks(std::vector<std::uint64_t> ranks);

// Rank of `gold` among all entities, skipping those in `filter_out` (the gold
// itself is never skipped). Ties count half, floored:
// 1 + #{better} + floor(#{equal} / 2). `filter_out` must be sorted.
std::uint64_t filtered_rank(std::span<const double> scores, EntityId gold,
                            std::span<const EntityId> filter_out);

// Ranks each triple twice: (h, r, ?) with gold t and (t, r^-1, ?) with gold h.
// Ranks are stored in that order, two per triple.
RankingReport evaluate_split(const TailScorer& scorer, std::span<const Triple> triples,
                             const FilterIndex& filter, std::size_t num_base_relations);

// Filtered MRR over `triples`; used as the validation signal during training.
double filtered_mrr(const TailScorer& scorer, std::span<const Triple> triples,
                    const FilterIndex& filter, std::size_t num_base_relations);

// {"mrr":..,"h1":..,"h3":..,"h10":..,"n":..}
std::string report_json(const RankingReport& r);

// CSV `h,r,t,direction,rank` using surface names.
void write_rank_csv(const std::filesystem::path& file, const Vocab& vocab,
                    std::span<const Triple> triples, const RankingReport& r);

}  // namespace kge
