#pragma once

// Knowledge graph storage: vocabularies, triple splits and the two (h, r)
// indices used for KvsAll training and filtered ranking.

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kge {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Triple {
  EntityId head;
  RelationId rel;
  EntityId tail;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

// A (head, relation) query key.
struct HrKey {
  EntityId head;
  RelationId rel;

  friend auto operator<=>(const HrKey&, const HrKey&) = default;
};

// Bijective string <-> dense id map.
class Names {
 public:
  // Returns the existing id or assigns the next one.
  std::uint32_t intern(std::string_view name);

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  // Throws IndexError for unknown names.
  std::uint32_t id(std::string_view name) const;
  bool contains(std::string_view name) const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

struct Vocab {
  Names entities;
  Names relations;  // base relations only; inverses are implicit

  std::size_t num_entities() const noexcept { return entities.size(); }
  std::size_t num_relations() const noexcept { return relations.size(); }
};

// Relation ids [0, R) are the base relations, [R, 2R) their reciprocals.
inline RelationId reciprocal(RelationId r, std::size_t num_base) {
  return r < num_base ? static_cast<RelationId>(r + num_base)
                      : static_cast<RelationId>(r - num_base);
}

enum class Split { kTrain, kValid, kTest };

std::string_view to_string(Split s) noexcept;
Split parse_split(std::string_view s);

struct Dataset {
  Vocab vocab;
  std::vector<Triple> train;
  std::vector<Triple> valid;
  std::vector<Triple> test;

  std::size_t num_entities() const noexcept { return vocab.num_entities(); }
  std::size_t num_base_relations() const noexcept { return vocab.num_relations(); }
  // Relation rows an embedding table needs: base plus reciprocal.
  std::size_t num_relations_with_reciprocals() const noexcept { return 2 * num_base_relations(); }

  const std::vector<Triple>& split(Split s) const;
};

struct StringTriple {
  std::string head;
  std::string rel;
  std::string tail;
};

struct DatasetBuildStats {
  std::array<std::size_t, 3> duplicates_dropped{};
};

// Builds a dataset from raw string triples. Vocabulary ids follow first
// occurrence across train, then valid, then test. Duplicates inside a split
// are dropped (first occurrence kept); a triple present in two splits is a
// ContractError.
Dataset build_dataset(const std::vector<StringTriple>& train, const std::vector<StringTriple>& valid,
                      const std::vector<StringTriple>& test, DatasetBuildStats* stats = nullptr);

// Reads <dir>/{train,valid,test}.txt (tab-separated h, r, t per line).
// Missing files raise IoError, malformed lines ParseError. Duplicate-drop
// warnings go to stderr.
Dataset load_dataset(const std::filesystem::path& dir);

// Writes the three splits back as TSV.
void save_dataset(const Dataset& d, const std::filesystem::path& dir);

// {"entities": {name: id}, "relations": {name: id}}
void write_vocab_json(const Vocab& v, const std::filesystem::path& file);

enum class Reciprocals { kExclude, kInclude };

// Map from (h, r) to a sorted, duplicate-free list of tails. Keys iterate in
// first-insertion order.
class PairIndex {
 public:
  void insert(HrKey key, EntityId tail);
  // Sorts and deduplicates every label list. Call once after inserting.
  void finalize();

  std::size_t size() const noexcept { return keys_.size(); }
  const std::vector<HrKey>& keys() const noexcept { return keys_; }
  bool contains(HrKey key) const;
  // Empty span when the key is absent.
  std::span<const EntityId> find(HrKey key) const;
  std::span<const EntityId> labels(std::size_t slot) const { return labels_[slot]; }
  std::size_t total_labels() const;

 private:
  static std::uint64_t pack(HrKey k) noexcept {
    return (static_cast<std::uint64_t>(k.head) << 32) | k.rel;
  }

  std::unordered_map<std::uint64_t, std::size_t> slots_;
  std::vector<HrKey> keys_;
  std::vector<std::vector<EntityId>> labels_;
};

// Training labels: every tail seen with (h, r) in train.
class KvsAllIndex final : public PairIndex {};

// Exclusion sets for filtered ranking: every tail seen with (h, r) anywhere.
class FilterIndex final : public PairIndex {};

KvsAllIndex build_kvsall(const Dataset& d, Reciprocals mode = Reciprocals::kInclude);
FilterIndex build_filter(const Dataset& d, Reciprocals mode = Reciprocals::kInclude);

}  // namespace kge
