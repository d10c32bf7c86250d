#include "kge/kg.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include <json.hpp>

#include "kge/error.hpp"

namespace kge {

std::uint32_t Names::intern(std::string_view name) {
  auto it = ids_.find(std::string(name));
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::uint32_t Names::id(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) throw IndexError("unknown name '" + std::string(name) + "'");
  return it->second;
}

bool Names::contains(std::string_view name) const { return ids_.count(std::string(name)) != 0; }

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kValid:
      return "valid";
    case Split::kTest:
      return "test";
  }
  return "?";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "valid") return Split::kValid;
  if (s == "test") return Split::kTest;
  throw ConfigError("unknown split '" + std::string(s) + "' (expected train|valid|test)");
}

const std::vector<Triple>& Dataset::split(Split s) const {
  switch (s) {
    case Split::kTrain:
      return train;
    case Split::kValid:
      return valid;
    case Split::kTest:
      return test;
  }
  return train;
}

namespace {

struct Overlap {
  std::size_t split;  // the later split holding the repeated triple
  std::size_t index;  // position within that split's raw input
};

Dataset build(const std::array<const std::vector<StringTriple>*, 3>& raw, DatasetBuildStats* stats,
              std::optional<Overlap>* overlap) {
  Dataset d;
  // Interning pass first so ids follow first occurrence across splits.
  for (const auto* split : raw) {
    for (const auto& st : *split) {
      d.vocab.entities.intern(st.head);
      d.vocab.relations.intern(st.rel);
      d.vocab.entities.intern(st.tail);
    }
  }
  std::array<std::vector<Triple>*, 3> out{&d.train, &d.valid, &d.test};
  std::set<Triple> seen_any;
  for (std::size_t s = 0; s < 3; ++s) {
    std::set<Triple> seen_here;
    for (std::size_t i = 0; i < raw[s]->size(); ++i) {
      const auto& st = (*raw[s])[i];
      const Triple t{d.vocab.entities.id(st.head), d.vocab.relations.id(st.rel),
                     d.vocab.entities.id(st.tail)};
      if (!seen_here.insert(t).second) {
        if (stats != nullptr) ++stats->duplicates_dropped[s];
        continue;
      }
      if (seen_any.count(t) != 0) {
        *overlap = Overlap{s, i};
        return d;
      }
      out[s]->push_back(t);
    }
    seen_any.insert(seen_here.begin(), seen_here.end());
  }
  return d;
}

constexpr std::array<const char*, 3> kSplitFiles{"train.txt", "valid.txt", "test.txt"};

std::vector<StringTriple> read_split(const std::filesystem::path& file,
                                     std::vector<std::size_t>& line_numbers) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::vector<StringTriple> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<std::string, 3> fields;
    std::size_t n = 0;
    std::size_t start = 0;
    for (;;) {
      const std::size_t tab = line.find('\t', start);
      const std::string_view field =
          std::string_view(line).substr(start, tab == std::string::npos ? std::string::npos : tab - start);
      if (n < 3) fields[n] = std::string(field);
      ++n;
      if (field.empty()) throw ParseError(file.string(), lineno, "empty field");
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (n != 3) {
      throw ParseError(file.string(), lineno, "expected 3 tab-separated fields, got " + std::to_string(n));
    }
    rows.push_back({std::move(fields[0]), std::move(fields[1]), std::move(fields[2])});
    line_numbers.push_back(lineno);
  }
  if (in.bad()) throw IoError("read failure on " + file.string());
  return rows;
}

}  // namespace

Dataset build_dataset(const std::vector<StringTriple>& train, const std::vector<StringTriple>& valid,
                      const std::vector<StringTriple>& test, DatasetBuildStats* stats) {
  std::optional<Overlap> overlap;
  Dataset d = build({&train, &valid, &test}, stats, &overlap);
  if (overlap) {
    throw ContractError(std::string("triple repeated across splits (in ") +
                        kSplitFiles[overlap->split] + " at row " + std::to_string(overlap->index) + ")");
  }
  return d;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::array<std::vector<StringTriple>, 3> raw;
  std::array<std::vector<std::size_t>, 3> lines;
  for (std::size_t s = 0; s < 3; ++s) raw[s] = read_split(dir / kSplitFiles[s], lines[s]);

  DatasetBuildStats stats;
  std::optional<Overlap> overlap;
  Dataset d = build({&raw[0], &raw[1], &raw[2]}, &stats, &overlap);
  if (overlap) {
    throw ParseError((dir / kSplitFiles[overlap->split]).string(), lines[overlap->split][overlap->index],
                     "triple already present in an earlier split");
  }
  for (std::size_t s = 0; s < 3; ++s) {
    if (stats.duplicates_dropped[s] != 0) {
      std::cerr << "warning: " << (dir / kSplitFiles[s]).string() << ": dropped "
                << stats.duplicates_dropped[s] << " duplicate triple(s)\n";
    }
  }
  return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::array<const std::vector<Triple>*, 3> splits{&d.train, &d.valid, &d.test};
  for (std::size_t s = 0; s < 3; ++s) {
    std::ofstream out(dir / kSplitFiles[s], std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / kSplitFiles[s]).string());
    for (const Triple& t : *splits[s]) {
      out << d.vocab.entities.name(t.head) << '\t' << d.vocab.relations.name(t.rel) << '\t'
          << d.vocab.entities.name(t.tail) << '\n';
    }
  }
}

void write_vocab_json(const Vocab& v, const std::filesystem::path& file) {
  nlohmann::ordered_json j;
  j["entities"] = nlohmann::ordered_json::object();
  j["relations"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < v.entities.size(); ++i) j["entities"][v.entities.name(i)] = i;
  for (std::size_t i = 0; i < v.relations.size(); ++i) j["relations"][v.relations.name(i)] = i;
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out << j.dump(1) << '\n';
}

void PairIndex::insert(HrKey key, EntityId tail) {
  auto [it, fresh] = slots_.try_emplace(pack(key), keys_.size());
  if (fresh) {
    keys_.push_back(key);
    labels_.emplace_back();
  }
  labels_[it->second].push_back(tail);
}

void PairIndex::finalize() {
  for (auto& l : labels_) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
}

bool PairIndex::contains(HrKey key) const { return slots_.count(pack(key)) != 0; }

std::span<const EntityId> PairIndex::find(HrKey key) const {
  auto it = slots_.find(pack(key));
  if (it == slots_.end()) return {};
  return labels_[it->second];
}

std::size_t PairIndex::total_labels() const {
  std::size_t n = 0;
  for (const auto& l : labels_) n += l.size();
  return n;
}

namespace {

template <typename Index>
void add_triples(Index& idx, std::span<const Triple> triples, std::size_t num_base, Reciprocals mode) {
  for (const Triple& t : triples) {
    idx.insert({t.head, t.rel}, t.tail);
    if (mode == Reciprocals::kInclude) idx.insert({t.tail, reciprocal(t.rel, num_base)}, t.head);
  }
}

}  // namespace

KvsAllIndex build_kvsall(const Dataset& d, Reciprocals mode) {
  KvsAllIndex idx;
  add_triples(idx, d.train, d.num_base_relations(), mode);
  idx.finalize();
  return idx;
}

FilterIndex build_filter(const Dataset& d, Reciprocals mode) {
  FilterIndex idx;
  for (const auto* split : {&d.train, &d.valid, &d.test}) add_triples(idx, *split, d.num_base_relations(), mode);
  idx.finalize();
  return idx;
}

}  // namespace kge
