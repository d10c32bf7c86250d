// End-to-end checks of the kge executable.

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include <json.hpp>

#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using kge::test::read_text;
using kge::test::write_text;

namespace {

const fs::path kData = KGE_DATA_DIR;
const std::string kCli = KGE_CLI_PATH;

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const std::string cmd = "'" + kCli + "' " + args + " > '" + out.string() + "' 2> '" + (dir / "stderr.txt").string() + "'";
  const int status = std::system(cmd.c_str());
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, read_text(out)};
}

// A small family tree plus a 'likes' relation; every entity has out-edges.
fs::path toy_dataset(const std::string& name) {
  const auto dir = kge::test::temp_dir(name);
  write_text(dir / "train.txt",
             "ann\tparent\tbob\nbob\tparent\tcat\ncat\tparent\tdan\nann\tlikes\tcat\nbob\tlikes\tdan\n"
             "dan\tlikes\tann\ncat\tlikes\tbob\neve\tparent\tann\neve\tlikes\tbob\ndan\tparent\teve\n");
  write_text(dir / "valid.txt", "");
  write_text(dir / "test.txt", "");
  return dir;
}

std::string umls_small(const fs::path& out, const std::string& strategy, int seed = 3) {
  return "train --data '" + (kData / "UMLS").string() + "' --model ComplEx --dim 16 --epochs 4 --strategy " +
         strategy + " --seed " + std::to_string(seed) + " --quiet --out '" + out.string() + "'";
}

}  // namespace

TEST_CASE("train twice with the same seed gives identical artifacts") {
  const auto dir = kge::test::temp_dir("cli_det");
  for (const char* strategy : {"none", "swa", "aswa", "snape"}) {
    CAPTURE(strategy);
    const auto a = run(umls_small(dir / "a", strategy), dir);
    const auto b = run(umls_small(dir / "b", strategy), dir);
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(a.out == b.out);
    CHECK(read_text(dir / "a" / "running.kgec") == read_text(dir / "b" / "running.kgec"));
    if (std::string(strategy) != "none") {
      CHECK(read_text(dir / "a" / "ensemble.kgec") == read_text(dir / "b" / "ensemble.kgec"));
    }
    CHECK(read_text(dir / "a" / "metrics.csv") == read_text(dir / "b" / "metrics.csv"));
    const auto manifest = json::parse(read_text(dir / "a" / "manifest.json"));
    CHECK(manifest["reports"] == json::parse(a.out));
    CHECK(manifest["config"]["strategy"] == strategy);
    fs::remove_all(dir / "a");
    fs::remove_all(dir / "b");
  }
}

TEST_CASE("swa and none share the running trajectory") {
  const auto dir = kge::test::temp_dir("cli_swa");
  REQUIRE(run(umls_small(dir / "none", "none"), dir).code == 0);
  REQUIRE(run(umls_small(dir / "swa", "swa"), dir).code == 0);
  CHECK(read_text(dir / "none" / "running.kgec") == read_text(dir / "swa" / "running.kgec"));
  const auto m1 = json::parse(read_text(dir / "none" / "manifest.json"))["epochs"];
  const auto m2 = json::parse(read_text(dir / "swa" / "manifest.json"))["epochs"];
  REQUIRE(m1.size() == m2.size());
  for (std::size_t i = 0; i < m1.size(); ++i) {
    CHECK(m1[i]["train_loss"] == m2[i]["train_loss"]);
    CHECK(m1[i]["val_mrr_running"] == m2[i]["val_mrr_running"]);
  }
}

TEST_CASE("eval is byte-identical across runs and checks compatibility") {
  const auto dir = kge::test::temp_dir("cli_eval");
  REQUIRE(run(umls_small(dir / "run", "aswa"), dir).code == 0);
  const std::string ev = "eval --checkpoint '" + (dir / "run" / "ensemble.kgec").string() + "' --data '" +
                         (kData / "UMLS").string() + "' --split test";
  const auto a = run(ev + " --ranks-csv '" + (dir / "ranks.csv").string() + "'", dir);
  const auto b = run(ev, dir);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  const auto report = json::parse(a.out);
  CHECK(report["n"] == 2 * 661);
  const auto manifest = json::parse(read_text(dir / "run" / "manifest.json"));
  CHECK(manifest["reports"]["ensemble"]["test"] == report);
  CHECK(read_text(dir / "ranks.csv").rfind("h,r,t,direction,rank\n", 0) == 0);

  const auto mismatch = run("eval --checkpoint '" + (dir / "run" / "ensemble.kgec").string() + "' --data '" +
                                (kData / "KINSHIP").string() + "'",
                            dir);
  CHECK(mismatch.code == 3);
  CHECK(read_text(dir / "stderr.txt").find("checkpoint has") != std::string::npos);
}

TEST_CASE("exit codes") {
  const auto dir = kge::test::temp_dir("cli_exit");
  CHECK(run("", dir).code == 2);
  CHECK(run("train --data x --frobnicate 1", dir).code == 2);
  CHECK(run("train --data '" + (kData / "UMLS").string() + "' --model TransE --out '" + (dir / "o").string() + "'", dir)
            .code == 2);
  CHECK(run("train --data '" + (kData / "UMLS").string() + "' --dim 6 --model QMult --out '" + (dir / "o").string() + "'",
            dir)
            .code == 2);
  CHECK(run("train --data '" + (dir / "missing").string() + "' --out '" + (dir / "o").string() + "'", dir).code == 3);
  CHECK(run("train --data '" + (kData / "UMLS").string() +
                "' --dim 8 --epochs 2 --optimizer sgd --lr 1e300 --quiet --out '" + (dir / "o").string() + "'",
            dir)
            .code == 4);
  const auto bad = kge::test::temp_dir("cli_exit_bad");
  write_text(bad / "train.txt", "a\tr\n");
  write_text(bad / "valid.txt", "");
  write_text(bad / "test.txt", "");
  CHECK(run("train --data '" + bad.string() + "' --out '" + (dir / "o").string() + "'", dir).code == 3);
  CHECK(read_text(dir / "stderr.txt").find("train.txt:1") != std::string::npos);
}

TEST_CASE("a memorizing toy model ranks its own training triples first") {
  const auto data = toy_dataset("cli_toy");
  const auto dir = kge::test::temp_dir("cli_toy_run");
  const auto t = run("train --data '" + data.string() +
                         "' --model ComplEx --dim 32 --epochs 200 --lr 0.05 --batch-size 4 --quiet --out '" +
                         (dir / "run").string() + "'",
                     dir);
  REQUIRE(t.code == 0);
  const auto ckpt = (dir / "run" / "running.kgec").string();
  const auto ev = run("eval --checkpoint '" + ckpt + "' --data '" + data.string() + "' --split train", dir);
  REQUIRE(ev.code == 0);
  CHECK(json::parse(ev.out)["mrr"] == 1.0);

  const auto q = (dir / "q.jsonl").string();
  const auto gen = run("gen-queries --data '" + data.string() + "' --type 2p --count 5 --seed 1 --out '" + q + "'", dir);
  REQUIRE(gen.code == 0);
  CHECK(fs::exists(dir / "q.vocab.json"));
  const auto ans = run("answer --checkpoint '" + ckpt + "' --queries '" + q + "'", dir);
  REQUIRE(ans.code == 0);
  CHECK(json::parse(ans.out)["2p"]["mrr"] == 1.0);
}

TEST_CASE("answer: default beam is 10, wider beams do not hurt on a toy KG") {
  const auto data = toy_dataset("cli_beam");
  const auto dir = kge::test::temp_dir("cli_beam_run");
  REQUIRE(run("train --data '" + data.string() + "' --model DistMult --dim 8 --epochs 5 --quiet --out '" +
                  (dir / "run").string() + "'",
              dir)
              .code == 0);
  const auto q = (dir / "q.jsonl").string();
  REQUIRE(run("gen-queries --data '" + data.string() + "' --type 2p 3p ip up --count 3 --seed 2 --out '" + q + "'", dir)
              .code == 0);
  const std::string base = "answer --checkpoint '" + (dir / "run" / "running.kgec").string() + "' --queries '" + q + "'";
  const auto dflt = run(base, dir);
  const auto k10 = run(base + " -k 10", dir);
  const auto k1 = run(base + " -k 1", dir);
  const auto kall = run(base + " --beam-width 6 --rankings-csv '" + (dir / "r.csv").string() + "'", dir);
  REQUIRE(dflt.code == 0);
  CHECK(dflt.out == k10.out);
  CHECK(dflt.out == run(base, dir).out);
  const auto j1 = json::parse(k1.out), jall = json::parse(kall.out);
  for (const auto& [type, rep] : jall.items()) CHECK(rep["mrr"].get<double>() >= j1[type]["mrr"].get<double>());
  CHECK(read_text(dir / "r.csv").rfind("query,type,answer,rank\n", 0) == 0);
  CHECK(run(base + " -k 0", dir).code == 2);
  CHECK(run(base + " --tnorm lukasiewicz", dir).code == 2);
}

TEST_CASE("TOML config file, flags take precedence") {
  const auto dir = kge::test::temp_dir("cli_toml");
  write_text(dir / "cfg.toml", "[train]\ndata = \"" + (kData / "UMLS").string() +
                                   "\"\nmodel = \"DistMult\"\ndim = 8\nepochs = 3\nseed = 9\nquiet = true\n");
  const auto r = run("--config '" + (dir / "cfg.toml").string() + "' train --epochs 2 --out '" + (dir / "o").string() + "'",
                     dir);
  REQUIRE(r.code == 0);
  const auto m = json::parse(read_text(dir / "o" / "manifest.json"));
  CHECK(m["config"]["model"] == "DistMult");
  CHECK(m["config"]["dim"] == 8);
  CHECK(m["config"]["seed"] == 9);
  CHECK(m["config"]["epochs"] == 2);
}
