#include "kge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "kge/error.hpp"

namespace kge {

namespace {

class Writer {
 public:
  void bytes(const char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void matrix(const Matrix& m) {
    for (double v : m.values()) f64(v);
  }
  std::size_t size() const { return out_.size(); }
  // Overwrites a previously reserved u64 at `at`.
  void patch_u64(std::size_t at, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}

  bool done() const { return pos_ == b_.size(); }
  std::size_t pos() const { return pos_; }
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw CompatError("checkpoint truncated");
  }
  std::string tag() {
    need(4);
    std::string t(reinterpret_cast<const char*>(b_.data() + pos_), 4);
    pos_ += 4;
    return t;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  Matrix matrix(std::uint64_t rows, std::uint64_t cols) {
    if (cols != 0 && rows > (b_.size() - pos_) / 8 / cols) throw CompatError("checkpoint truncated");
    Matrix m(rows, cols);
    for (double& v : m.values()) v = f64();
    return m;
  }
  void skip(std::uint64_t n) {
    need(n);
    pos_ += n;
  }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

void write_section(Writer& w, const char* tag, auto&& body) {
  w.bytes(tag, 4);
  const std::size_t len_at = w.size();
  w.u64(0);
  const std::size_t start = w.size();
  body();
  w.patch_u64(len_at, w.size() - start);
}

ModelKind checked_kind(std::uint32_t tag) {
  if (tag > static_cast<std::uint32_t>(ModelKind::kQMult)) throw CompatError("unknown model kind tag");
  return static_cast<ModelKind>(tag);
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  Writer w;
  w.bytes("KGEC", 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(c.model.kind));
  w.u64(c.model.num_entities());
  w.u64(c.model.num_relations());
  w.u64(c.model.dim());
  w.matrix(c.model.entities);
  w.matrix(c.model.relations);

  if (c.adam) {
    const AdamState& a = *c.adam;
    if (!a.m_entities.same_shape(c.model.entities) || !a.m_relations.same_shape(c.model.relations)) {
      throw ContractError("optimizer state is not congruent with the checkpointed model");
    }
    write_section(w, "ADAM", [&] {
      w.u64(a.step);
      w.f64(a.config.lr);
      w.f64(a.config.beta1);
      w.f64(a.config.beta2);
      w.f64(a.config.eps);
      w.matrix(a.m_entities);
      w.matrix(a.v_entities);
      w.matrix(a.m_relations);
      w.matrix(a.v_relations);
    });
  }
  if (c.ensemble) {
    const EnsembleSection& e = *c.ensemble;
    write_section(w, "ENSB", [&] {
      w.u32(static_cast<std::uint32_t>(e.kind));
      w.u64(e.count);
      w.f64(e.val_aswa);
      if (e.kind == EnsembleKind::kSnapE) {
        if (e.weights.size() != e.losses.size() || e.extra_snapshots.size() + 1 != e.weights.size()) {
          throw ContractError("inconsistent snapshot ensemble section");
        }
        w.u64(e.weights.size());
        for (double x : e.weights) w.f64(x);
        for (double x : e.losses) w.f64(x);
        for (const auto& s : e.extra_snapshots) {
          if (!s.congruent(c.model)) throw ContractError("snapshot shape differs from the checkpointed model");
          w.matrix(s.entities);
          w.matrix(s.relations);
        }
      }
    });
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.tag() != "KGEC") throw CompatError("not a checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw CompatError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.model.kind = checked_kind(r.u32());
  const std::uint64_t ne = r.u64(), nr = r.u64(), d = r.u64();
  c.model.entities = r.matrix(ne, d);
  c.model.relations = r.matrix(nr, d);

  while (!r.done()) {
    const std::string tag = r.tag();
    const std::uint64_t len = r.u64();
    r.need(len);
    const std::size_t end = r.pos() + len;
    if (tag == "ADAM") {
      AdamState a;
      a.step = r.u64();
      a.config.lr = r.f64();
      a.config.beta1 = r.f64();
      a.config.beta2 = r.f64();
      a.config.eps = r.f64();
      a.m_entities = r.matrix(ne, d);
      a.v_entities = r.matrix(ne, d);
      a.m_relations = r.matrix(nr, d);
      a.v_relations = r.matrix(nr, d);
      c.adam = std::move(a);
    } else if (tag == "ENSB") {
      EnsembleSection e;
      const std::uint32_t kind = r.u32();
      if (kind > static_cast<std::uint32_t>(EnsembleKind::kSnapE)) throw CompatError("unknown ensemble kind");
      e.kind = static_cast<EnsembleKind>(kind);
      e.count = r.u64();
      e.val_aswa = r.f64();
      if (e.kind == EnsembleKind::kSnapE) {
        const std::uint64_t n = r.u64();
        if (n == 0 || n > len / 16) throw CompatError("bad snapshot count");
        for (std::uint64_t i = 0; i < n; ++i) e.weights.push_back(r.f64());
        for (std::uint64_t i = 0; i < n; ++i) e.losses.push_back(r.f64());
        for (std::uint64_t i = 1; i < n; ++i) {
          EmbeddingState s;
          s.kind = c.model.kind;
          s.entities = r.matrix(ne, d);
          s.relations = r.matrix(nr, d);
          e.extra_snapshots.push_back(std::move(s));
        }
      }
      c.ensemble = std::move(e);
    } else {
      r.skip(len);
    }
    if (r.pos() != end) throw CompatError("section '" + tag + "' length mismatch");
  }
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& file) {
  const auto bytes = encode_checkpoint(c);
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failure on " + file.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

Checkpoint swa_checkpoint(const SwaState& s) {
  EnsembleSection e;
  e.kind = EnsembleKind::kSwa;
  e.count = s.n_models;
  return {s.theta, std::nullopt, std::move(e)};
}

Checkpoint aswa_checkpoint(const AswaState& a) {
  EnsembleSection e;
  e.kind = EnsembleKind::kAswa;
  e.count = a.alpha_count;
  e.val_aswa = a.val_aswa;
  return {a.theta, std::nullopt, std::move(e)};
}

Checkpoint snape_checkpoint(const SnapshotEnsemble& ens) {
  if (ens.empty()) throw ContractError("snapshot ensemble is empty");
  EnsembleSection e;
  e.kind = EnsembleKind::kSnapE;
  e.count = ens.snapshots.size();
  e.weights = ens.weights;
  e.losses = ens.train_losses;
  e.extra_snapshots.assign(ens.snapshots.begin() + 1, ens.snapshots.end());
  return {ens.snapshots.front(), std::nullopt, std::move(e)};
}

SnapshotEnsemble snapshots_from_checkpoint(const Checkpoint& c) {
  if (!c.ensemble || c.ensemble->kind != EnsembleKind::kSnapE) throw CompatError("not a snapshot ensemble checkpoint");
  SnapshotEnsemble ens;
  ens.snapshots.push_back(c.model);
  for (const auto& s : c.ensemble->extra_snapshots) ens.snapshots.push_back(s);
  ens.train_losses = c.ensemble->losses;
  ens.weights = c.ensemble->weights;
  return ens;
}

}  // namespace kge
