#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "hyper/cli/cli.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace hyper;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "hyper");
  std::ostringstream out, err;
  Run r;
  r.code = cli::dispatch(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"stats"}).code == 2);
  CHECK(run({"stats", "--facts"}).code == 2);
  CHECK(run({"train", "--no-such-flag", "1"}).code == 2);
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("pretrain") != std::string::npos);
  CHECK(run({"--version"}).out == std::string(cli::kVersion) + "\n");
}

TEST_CASE("domain errors exit with 1") {
  support::TempDir dir("cli_err");
  CHECK(run({"stats", "--facts", dir.file("missing.txt")}).code == 1);
  write_text_file(dir.file("bad.txt"), "r\ta\tb\nr\ta\n");
  const auto r = run({"stats", "--facts", dir.file("bad.txt")});
  CHECK(r.code == 1);
  CHECK(r.err.find("arity") != std::string::npos);
  write_text_file(dir.file("g.txt"), support::kFigure1);
  CHECK(run({"eval", "--graph", dir.file("g.txt"), "--test", dir.file("g.txt"), "--ckpt", dir.file("none.ckpt")})
            .code == 1);
  CHECK(run({"train", "--graph", dir.file("g.txt"), "--out", dir.file("nodir/m.ckpt")}).code == 1);
}

TEST_CASE("configuration precedence") {
  auto cfg = cli::RunConfig::defaults("train");
  CHECK(cfg.get_size("negatives") == 256);
  CHECK(cli::RunConfig::defaults("pretrain").get_size("batch_size") == 32);
  cfg.merge_text("# comment\nnegatives = 12\nlr=0.1\n");
  CHECK(cfg.get_size("negatives") == 12);
  CHECK(cfg.training().lr == 0.1);
  CHECK_THROWS_AS(cfg.merge_text("bogus=1\n"), cli::UsageError);
  CHECK_THROWS_AS(cfg.merge_text("no equals sign\n"), cli::UsageError);

  support::TempDir dir("cli_cfg");
  write_text_file(dir.file("g.txt"), support::kFigure1);
  write_text_file(dir.file("run.cfg"), "dim=8\nrel_layers=1\nent_layers=1\nepochs=1\nnegatives=2\n");
  const auto r = run({"train", "--config", dir.file("run.cfg"), "--dim", "4", "--graph", dir.file("g.txt"), "--out",
                      dir.file("m.ckpt")});
  REQUIRE(r.code == 0);
  const auto ck = tensor::load_checkpoint(dir.file("m.ckpt"));
  const auto mc = model::config_from_checkpoint(ck);
  CHECK(mc.dim == 4);
  CHECK(mc.rel_layers == 1);
  const auto manifest = nlohmann::json::parse(read_text_file(dir.file("m.ckpt.manifest.json")));
  CHECK(manifest["command"] == "train");
  CHECK(manifest["config"]["negatives"] == "2");
}

TEST_CASE("data tools") {
  support::TempDir dir("cli_data");
  write_text_file(dir.file("g.txt"), support::kFigure1);
  const auto s = run({"stats", "--facts", dir.file("g.txt")});
  CHECK(s.code == 0);
  CHECK(s.out.find("33.3") != std::string::npos);

  CHECK(run({"relgraph", "build", "--facts", dir.file("g.txt"), "--out", dir.file("rg.tsv")}).code == 0);
  const auto tsv = read_text_file(dir.file("rg.tsv"));
  CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 6);

  CHECK(run({"reify", "--facts", dir.file("g.txt"), "--out", dir.file("r.txt")}).code == 0);
  CHECK(run({"reify", "--facts", dir.file("r.txt"), "--inverse", "true", "--out", dir.file("back.txt")}).code == 0);
  CHECK(support::named_facts(read_fact_file(dir.file("back.txt"))) == support::named_facts(support::figure1()));
  CHECK(run({"reify", "--facts", dir.file("g.txt"), "--scheme", "star", "--out", dir.file("x.txt")}).code == 2);

  CHECK(run({"synth", "--out", dir.file("corpus.txt")}).code == 0);
  CHECK(read_fact_file(dir.file("corpus.txt")).num_edges() == 300);
  CHECK(run({"corrupt", "--facts", dir.file("corpus.txt"), "--relation", "project", "--out", dir.file("c.txt")})
            .code == 0);
  CHECK(read_fact_file(dir.file("c.txt")).num_edges() == 300);
  CHECK(run({"corrupt", "--facts", dir.file("corpus.txt"), "--relation", "nope", "--out", dir.file("c.txt")}).code ==
        1);
}

TEST_CASE("split, train and evaluate end to end") {
  support::TempDir dir("cli_pipe");
  REQUIRE(run({"synth", "--kind", "random", "--entities", "600", "--num-facts", "1500", "--relations", "10", "--out",
               dir.file("src.txt")})
              .code == 0);
  const auto split = run({"split", "generate", "--facts", dir.file("src.txt"), "--n-train", "60", "--n-test", "60",
                          "--p-rel", "0.4", "--p-tri", "0.3", "--seed", "1", "--out", dir.path.string()});
  REQUIRE(split.code == 0);
  for (const char* f : {"train.txt", "inference.txt", "valid.txt", "test.txt", "split.json", "manifest.json"}) {
    CHECK(std::filesystem::exists(dir.path / f));
  }
  const auto info = nlohmann::json::parse(read_text_file(dir.file("split.json")));
  CHECK(info.contains("unseen_fraction"));

  const auto trained = run({"train", "--graph", dir.file("train.txt"), "--dim", "8", "--rel-layers", "2",
                            "--ent-layers", "2", "--negatives", "8", "--epochs", "2", "--out", dir.file("m.ckpt"),
                            "--log", dir.file("log.tsv")});
  REQUIRE(trained.code == 0);
  CHECK(read_text_file(dir.file("log.tsv")).rfind("step\tloss\tval_mrr", 0) == 0);

  const auto ev = run({"eval", "--graph", dir.file("inference.txt"), "--test", dir.file("test.txt"), "--filter",
                       dir.file("valid.txt"), "--ckpt", dir.file("m.ckpt")});
  REQUIRE(ev.code == 0);
  const auto j = nlohmann::json::parse(ev.out);
  CHECK(j["mrr"].get<double>() > 0);
  CHECK(j["mrr"].get<double>() <= 1);
  CHECK(j["hits@1"].get<double>() <= j["hits@10"].get<double>());

  const auto tuned = run({"finetune", "--ckpt", dir.file("m.ckpt"), "--graph", dir.file("inference.txt"), "--valid",
                          dir.file("valid.txt"), "--epochs", "1", "--negatives", "8", "--out", dir.file("ft.ckpt")});
  CHECK(tuned.code == 0);
  CHECK(run({"finetune", "--ckpt", dir.file("m.ckpt"), "--graph", dir.file("inference.txt"), "--dim", "16", "--out",
             dir.file("bad.ckpt")})
            .code == 1);
  const auto pre = run({"pretrain", "--graphs", dir.file("train.txt") + "," + dir.file("inference.txt"), "--dim", "8",
                        "--rel-layers", "1", "--ent-layers", "1", "--negatives", "4", "--batch-size", "2", "--steps",
                        "4", "--val-every", "2", "--out", dir.file("pre.ckpt")});
  CHECK(pre.code == 0);
}
