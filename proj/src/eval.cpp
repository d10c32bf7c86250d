#include "kge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "kge/error.hpp"

namespace kge {

RankingReport summarize_ranks(std::vector<std::uint64_t> ranks) {
  RankingReport r;
  r.n = ranks.size();
  if (r.n == 0) {
    r.ranks = std::move(ranks);
    return r;
  }
  double rr = 0.0;
  std::size_t h1 = 0, h3 = 0, h10 = 0;
  for (std::uint64_t k : ranks) {
    rr += 1.0 / static_cast<double>(k);
    h1 += k <= 1;
    h3 += k <= 3;
    h10 += k <= 10;
  }
  const auto n = static_cast<double>(r.n);
  r.mrr = rr / n;
  r.hits1 = static_cast<double>(h1) / n;
  r.hits3 = static_cast<double>(h3) / n;
  r.hits10 = static_cast<double>(h10) / n;
  r.ranks = std::move(ranks);
  return r;
}

std::uint64_t filtered_rank(std::span<const double> scores, EntityId gold,
                            std::span<const EntityId> filter_out) {
  if (gold >= scores.size()) throw IndexError("gold entity " + std::to_string(gold) + " out of range");
  const double g = scores[gold];
  std::uint64_t better = 0, equal = 0;
  auto f = filter_out.begin();
  for (std::size_t e = 0; e < scores.size(); ++e) {
    while (f != filter_out.end() && *f < e) ++f;
    if (e == gold || (f != filter_out.end() && *f == e)) continue;
    better += scores[e] > g;
    equal += scores[e] == g;
  }
  return 1 + better + equal / 2;
}

RankingReport evaluate_split(const TailScorer& scorer, std::span<const Triple> triples,
                             const FilterIndex& filter, std::size_t num_base_relations) {
  std::vector<double> row(scorer.num_entities());
  std::vector<std::uint64_t> ranks;
  ranks.reserve(2 * triples.size());
  for (const Triple& t : triples) {
    scorer.score_all_tails(t.head, t.rel, row);
    ranks.push_back(filtered_rank(row, t.tail, filter.find({t.head, t.rel})));
    const RelationId inv = reciprocal(t.rel, num_base_relations);
    scorer.score_all_tails(t.tail, inv, row);
    ranks.push_back(filtered_rank(row, t.head, filter.find({t.tail, inv})));
  }
  return summarize_ranks(std::move(ranks));
}

double filtered_mrr(const TailScorer& scorer, std::span<const Triple> triples, const FilterIndex& filter,
                    std::size_t num_base_relations) {
  return evaluate_split(scorer, triples, filter, num_base_relations).mrr;
}

std::string report_json(const RankingReport& r) {
  nlohmann::ordered_json j;
  j["mrr"] = r.mrr;
  j["h1"] = r.hits1;
  j["h3"] = r.hits3;
  j["h10"] = r.hits10;
  j["n"] = r.n;
  return j.dump();
}

void write_rank_csv(const std::filesystem::path& file, const Vocab& vocab, std::span<const Triple> triples,
                    const RankingReport& r) {
  if (r.ranks.size() != 2 * triples.size()) throw ContractError("rank list does not match triples");
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out << "h,r,t,direction,rank\n";
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const Triple& t = triples[i];
    const auto& h = vocab.entities.name(t.head);
    const auto& rel = vocab.relations.name(t.rel);
    const auto& tl = vocab.entities.name(t.tail);
    out << h << ',' << rel << ',' << tl << ",tail," << r.ranks[2 * i] << '\n';
    out << h << ',' << rel << ',' << tl << ",head," << r.ranks[2 * i + 1] << '\n';
  }
}

}  // namespace kge
