// kge: train, evaluate and query knowledge graph embedding ensembles.
//
//   kge train --data DIR --strategy aswa --out RUN_DIR
//   kge eval --checkpoint RUN_DIR/ensemble.kgec --data DIR --split test
//   kge gen-queries --data DIR --type 3i --count 500 --out q.jsonl
//   kge answer --checkpoint RUN_DIR/ensemble.kgec --queries q.jsonl
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 divergence.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kge/checkpoint.hpp"
#include "kge/ensemble.hpp"
#include "kge/error.hpp"
#include "kge/eval.hpp"
#include "kge/kg.hpp"
#include "kge/queries.hpp"
#include "kge/simd.hpp"
#include "kge/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;

json report_object(const kge::RankingReport& r) { return json::parse(kge::report_json(r)); }

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw kge::IoError("cannot write " + file.string());
  out << text;
}

// Holds whatever a checkpoint needs to score tails.
struct LoadedScorer {
  kge::Checkpoint checkpoint;
  kge::SnapshotEnsemble snapshots;
  std::unique_ptr<kge::TailScorer> scorer;
};

LoadedScorer load_scorer(const fs::path& file) {
  LoadedScorer ls;
  ls.checkpoint = kge::load_checkpoint(file);
  if (ls.checkpoint.ensemble && ls.checkpoint.ensemble->kind == kge::EnsembleKind::kSnapE) {
    ls.snapshots = kge::snapshots_from_checkpoint(ls.checkpoint);
    ls.scorer = std::make_unique<kge::SnapshotScorer>(ls.snapshots);
  } else {
    ls.scorer = std::make_unique<kge::ModelScorer>(ls.checkpoint.model);
  }
  return ls;
}

// ------------------------------------------------------------------ train

struct TrainOptions {
  kge::TrainConfig cfg;
  std::string model = "ComplEx";
  std::string optimizer = "adam";
  std::string strategy = "none";
  std::string out_dir = "run";
  bool quiet = false;
};

json config_json(const kge::TrainConfig& c) {
  json j;
  j["dataset_dir"] = c.dataset_dir;
  j["model"] = std::string(kge::to_string(c.model));
  j["dim"] = c.dim;
  j["epochs"] = c.epochs;
  j["optimizer"] = std::string(kge::to_string(c.optimizer));
  j["lr"] = c.lr;
  j["batch_size"] = c.batch_size;
  j["strategy"] = std::string(kge::to_string(c.strategy));
  j["swa_start"] = c.swa_start;
  j["seed"] = c.seed;
  j["smoothing"] = c.smoothing;
  j["val_sample"] = c.val_sample;
  j["val_every"] = c.val_every;
  j["snape_cycles"] = c.snape_cycles;
  j["snape_defer"] = c.snape_defer;
  return j;
}

int run_train(TrainOptions& o) {
  o.cfg.model = kge::parse_model_kind(o.model);
  o.cfg.optimizer = kge::parse_optimizer(o.optimizer);
  o.cfg.strategy = kge::parse_strategy(o.strategy);
  kge::validate(o.cfg);

  const auto t0 = std::chrono::steady_clock::now();
  const kge::Dataset d = kge::load_dataset(o.cfg.dataset_dir);
  const fs::path out(o.out_dir);
  fs::create_directories(out);
  kge::write_vocab_json(d.vocab, out / "vocab.json");

  const auto t1 = std::chrono::steady_clock::now();
  const kge::TrainResult res = kge::train(d, o.cfg, [&](const kge::EpochRow& r) {
    if (o.quiet) return;
    std::cerr << "epoch " << r.epoch << " loss " << r.train_loss;
    if (r.val_running) std::cerr << " val_running " << *r.val_running;
    if (r.val_ensemble) std::cerr << " val_ensemble " << *r.val_ensemble;
    if (!r.action.empty()) std::cerr << ' ' << r.action;
    std::cerr << '\n';
  });
  const auto t2 = std::chrono::steady_clock::now();

  json checkpoints;
  kge::Checkpoint running{res.running, res.adam, std::nullopt};
  kge::save_checkpoint(running, out / "running.kgec");
  checkpoints["running"] = (out / "running.kgec").string();
  if (res.swa) kge::save_checkpoint(kge::swa_checkpoint(*res.swa), out / "ensemble.kgec");
  if (res.aswa) kge::save_checkpoint(kge::aswa_checkpoint(*res.aswa), out / "ensemble.kgec");
  if (res.snapshots && !res.snapshots->empty()) {
    kge::save_checkpoint(kge::snape_checkpoint(*res.snapshots), out / "ensemble.kgec");
  }
  if (fs::exists(out / "ensemble.kgec") && res.has_ensemble()) checkpoints["ensemble"] = (out / "ensemble.kgec").string();

  write_text(out / "metrics.csv", kge::metrics_csv(res.epochs));
  if (res.aswa) {
    std::ofstream log(out / "aswa_log.csv", std::ios::binary);
    kge::write_aswa_log_csv(log, res.aswa->log);
  }

  const kge::FilterIndex filter = kge::build_filter(d);
  const std::size_t nb = d.num_base_relations();
  const kge::ModelScorer running_scorer(res.running);
  json reports;
  reports["running"]["valid"] = report_object(kge::evaluate_split(running_scorer, d.valid, filter, nb));
  reports["running"]["test"] = report_object(kge::evaluate_split(running_scorer, d.test, filter, nb));
  if (checkpoints.contains("ensemble")) {
    const auto scorer = res.ensemble_scorer();
    reports["ensemble"]["valid"] = report_object(kge::evaluate_split(*scorer, d.valid, filter, nb));
    reports["ensemble"]["test"] = report_object(kge::evaluate_split(*scorer, d.test, filter, nb));
  }
  const auto t3 = std::chrono::steady_clock::now();

  json epochs = json::array();
  for (const auto& r : res.epochs) {
    json e;
    e["epoch"] = r.epoch;
    e["train_loss"] = r.train_loss;
    e["val_mrr_running"] = r.val_running ? json(*r.val_running) : json(nullptr);
    e["val_mrr_ensemble"] = r.val_ensemble ? json(*r.val_ensemble) : json(nullptr);
    e["action"] = r.action;
    e["lr"] = r.lr;
    epochs.push_back(e);
  }
  auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
  json manifest;
  manifest["config"] = config_json(o.cfg);
  manifest["seed"] = o.cfg.seed;
  manifest["isa"] = std::string(kge::simd::to_string(kge::simd::kernels().isa));
  manifest["epochs"] = std::move(epochs);
  manifest["reports"] = reports;
  manifest["checkpoints"] = checkpoints;
  manifest["timings_seconds"] = {{"load", secs(t0, t1)}, {"train", secs(t1, t2)}, {"evaluate", secs(t2, t3)}};
  write_text(out / "manifest.json", manifest.dump(1) + "\n");

  std::cout << reports.dump() << '\n';
  return 0;
}

// ------------------------------------------------------------------- eval

int run_eval(const std::string& checkpoint, const std::string& data, const std::string& split_name,
             const std::string& ranks_csv) {
  const kge::Split split = kge::parse_split(split_name);
  const kge::Dataset d = kge::load_dataset(data);
  const LoadedScorer ls = load_scorer(checkpoint);
  if (ls.scorer->num_entities() != d.num_entities() ||
      ls.scorer->num_relations() != d.num_relations_with_reciprocals()) {
    throw kge::CompatError("checkpoint has " + std::to_string(ls.scorer->num_entities()) + " entities and " +
                           std::to_string(ls.scorer->num_relations()) + " relations; dataset needs " +
                           std::to_string(d.num_entities()) + " and " +
                           std::to_string(d.num_relations_with_reciprocals()));
  }
  const kge::FilterIndex filter = kge::build_filter(d);
  const auto& triples = d.split(split);
  const kge::RankingReport r = kge::evaluate_split(*ls.scorer, triples, filter, d.num_base_relations());
  if (!ranks_csv.empty()) kge::write_rank_csv(ranks_csv, d.vocab, triples, r);
  std::cout << kge::report_json(r) << '\n';
  return 0;
}

// ----------------------------------------------------------------- answer

int run_answer(const std::string& checkpoint, const std::string& queries_file, std::size_t beam_width,
               const std::string& tnorm, const std::string& rankings_csv) {
  const kge::BeamConfig cfg{beam_width, kge::parse_tnorm(tnorm)};
  if (cfg.beam_width == 0) throw kge::ConfigError("beam width must be >= 1");
  const LoadedScorer ls = load_scorer(checkpoint);
  const auto queries = kge::read_queries_jsonl(queries_file);
  for (const auto& q : queries) {
    try {
      kge::validate_query(q, ls.scorer->num_entities(), ls.scorer->num_relations());
    } catch (const kge::ContractError& e) {
      throw kge::CompatError(std::string("query does not fit the checkpoint: ") + e.what());
    }
  }
  const auto reports = kge::evaluate_queries(queries, *ls.scorer, cfg);

  if (!rankings_csv.empty()) {
    std::ofstream out(rankings_csv, std::ios::binary);
    if (!out) throw kge::IoError("cannot write " + rankings_csv);
    out << "query,type,answer,rank\n";
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const auto ranks = kge::rank_query_answers(queries[i], kge::query_scores(queries[i], *ls.scorer, cfg));
      for (std::size_t j = 0; j < ranks.size(); ++j) {
        out << i << ',' << kge::to_string(queries[i].type) << ',' << queries[i].answers[j] << ',' << ranks[j] << '\n';
      }
    }
  }

  json j;
  for (const auto& [type, r] : reports) j[std::string(kge::to_string(type))] = report_object(r);
  std::cout << j.dump() << '\n';
  return 0;
}

// ------------------------------------------------------------ gen-queries

int run_gen(const std::string& data, const std::vector<std::string>& types, std::size_t count, std::uint64_t seed,
            const std::string& out_file) {
  const kge::Dataset d = kge::load_dataset(data);
  std::vector<kge::Query> all;
  json summary;
  for (const auto& name : types) {
    const kge::QueryType t = kge::parse_query_type(name);
    auto qs = kge::generate_queries(d, t, count, seed);
    summary[name] = qs.size();
    all.insert(all.end(), std::make_move_iterator(qs.begin()), std::make_move_iterator(qs.end()));
  }
  kge::write_queries_jsonl(out_file, all);
  const fs::path vocab = fs::path(out_file).replace_extension(".vocab.json");
  kge::write_vocab_json(d.vocab, vocab);
  summary["vocab"] = vocab.string();
  std::cout << summary.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge graph embedding training with SWA / ASWA / SnapE ensembles"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file (command-line flags take precedence)");

  TrainOptions t;
  auto* train = app.add_subcommand("train", "Train a model with an optional ensemble strategy");
  train->add_option("--data", t.cfg.dataset_dir, "Dataset directory with train/valid/test.txt")->required();
  train->add_option("--model", t.model, "DistMult | ComplEx | QMult")->capture_default_str();
  train->add_option("--dim", t.cfg.dim, "Embedding width in real coordinates")->capture_default_str();
  train->add_option("--epochs", t.cfg.epochs, "Number of epochs N")->capture_default_str();
  train->add_option("--optimizer", t.optimizer, "adam | sgd")->capture_default_str();
  train->add_option("--lr", t.cfg.lr, "Learning rate")->capture_default_str();
  train->add_option("--batch-size", t.cfg.batch_size, "KvsAll keys per batch")->capture_default_str();
  train->add_option("--strategy", t.strategy, "none | swa | aswa | snape")->capture_default_str();
  train->add_option("--swa-start", t.cfg.swa_start, "First epoch absorbed by SWA (1-based)")->capture_default_str();
  train->add_option("--seed", t.cfg.seed, "Random seed")->capture_default_str();
  train->add_option("--smoothing", t.cfg.smoothing, "Label smoothing in [0, 1)")->capture_default_str();
  train->add_option("--val-sample", t.cfg.val_sample, "Validation triples per evaluation (0 = all)")
      ->capture_default_str();
  train->add_option("--val-every", t.cfg.val_every, "Validate every k epochs")->capture_default_str();
  train->add_option("--snape-cycles", t.cfg.snape_cycles, "SnapE cosine cycles")->capture_default_str();
  train->add_option("--snape-defer", t.cfg.snape_defer, "Fraction of epochs before cycling starts")
      ->capture_default_str();
  train->add_option("--out", t.out_dir, "Output directory")->capture_default_str();
  train->add_flag("--quiet", t.quiet, "No per-epoch progress on stderr");

  std::string ckpt, data, split = "test", ranks_csv;
  auto* eval = app.add_subcommand("eval", "Filtered link prediction on one split");
  eval->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  eval->add_option("--data", data, "Dataset directory")->required();
  eval->add_option("--split", split, "train | valid | test")->capture_default_str();
  eval->add_option("--ranks-csv", ranks_csv, "Write per-triple ranks to this CSV");

  std::string queries_file, tnorm = "product", rankings_csv;
  std::size_t beam_width = 10;
  auto* answer = app.add_subcommand("answer", "Answer multi-hop queries with beam search");
  answer->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  answer->add_option("--queries", queries_file, "Query JSON-lines file")->required();
  answer->add_option("-k,--beam-width", beam_width, "Substitutions kept per variable")->capture_default_str();
  answer->add_option("--tnorm", tnorm, "product | goedel")->capture_default_str();
  answer->add_option("--rankings-csv", rankings_csv, "Write per-answer ranks to this CSV");

  std::vector<std::string> types{"2p", "3p", "2i", "3i", "ip", "pi", "2u", "up"};
  std::size_t count = 500;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "queries.jsonl";
  auto* gen = app.add_subcommand("gen-queries", "Generate multi-hop queries from a dataset");
  gen->add_option("--data", data, "Dataset directory")->required();
  gen->add_option("--type", types, "Query types")->capture_default_str();
  gen->add_option("--count", count, "Queries per type")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output JSON-lines file")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train) return run_train(t);
    if (*eval) return run_eval(ckpt, data, split, ranks_csv);
    if (*answer) return run_answer(ckpt, queries_file, beam_width, tnorm, rankings_csv);
    if (*gen) return run_gen(data, types, count, gen_seed, gen_out);
  } catch (const kge::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const kge::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const kge::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
