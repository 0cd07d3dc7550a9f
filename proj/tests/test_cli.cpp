#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fga/checkpoint.hpp"
#include "fga/cli.hpp"
#include "fga/synthetic.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace fga;

namespace {

std::string tmp_path(const std::string& name) { return "/tmp/fga_cli_" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out);
  out << text;
}

// Runs the CLI in-process with stdout captured.
int run(const std::vector<std::string>& args, std::string* stdout_text = nullptr) {
  std::ostringstream captured;
  std::streambuf* old = std::cout.rdbuf(captured.rdbuf());
  int code = run_cli(args);
  std::cout.rdbuf(old);
  if (stdout_text) *stdout_text = captured.str();
  return code;
}

std::string write_spec(const std::string& name, int count, bool dense = false) {
  nlohmann::json j{{"count", count}, {"n_candidates", 7}, {"history_rounds", 2},
                   {"n_regions", 8}, {"d_image", 16},     {"mode", "answer"}};
  if (dense) j["dense_relevance"] = true;
  std::string path = tmp_path(name);
  spit(path, j.dump());
  return path;
}

std::string write_config(const std::string& name, int epochs = 2) {
  GenSpec spec;
  spec.n_candidates = 7;
  RunConfig cfg = synthetic_config(spec);
  cfg.d_embed = 8;
  cfg.d_question = 16;
  cfg.d_caption = 8;
  cfg.d_hist = 8;
  cfg.d_answer = 16;
  cfg.d_round = 8;
  cfg.batch_size = 8;
  cfg.epochs = epochs;
  std::string path = tmp_path(name);
  cfg.save(path);
  return path;
}

// One shared toy train/eval pipeline; built once, reused across cases.
struct Pipeline {
  std::string spec = write_spec("pipe_spec.json", 24);
  std::string cfg = write_config("pipe_cfg.json");
  std::string train_set = tmp_path("pipe_train.jsonl");
  std::string val_set = tmp_path("pipe_val.jsonl");
  std::string ckpt = tmp_path("pipe_model.ckpt");
  std::string log = tmp_path("pipe_log.json");

  Pipeline() {
    REQUIRE(run({"gen-data", "--spec", spec, "--out", train_set, "--seed", "1"}) == 0);
    REQUIRE(run({"gen-data", "--spec", spec, "--out", val_set, "--seed", "2"}) == 0);
    REQUIRE(run({"train", "--config", cfg, "--train", train_set, "--val", val_set, "--out", ckpt,
                 "--log", log}) == 0);
  }
};

Pipeline& pipeline() {
  static Pipeline p;
  return p;
}

}  // namespace

TEST_CASE("gen-data writes a dataset and is deterministic per seed") {
  std::string spec = write_spec("gen_spec.json", 12);
  std::string out_a = tmp_path("gen_a.jsonl");
  std::string out_b = tmp_path("gen_b.jsonl");

  std::string text;
  CHECK(run({"gen-data", "--spec", spec, "--out", out_a, "--seed", "7"}, &text) == 0);
  CHECK(text.find("12 records") != std::string::npos);
  CHECK(run({"gen-data", "--spec", spec, "--out", out_b, "--seed", "7"}) == 0);
  CHECK(slurp(out_a) == slurp(out_b));

  std::string out_c = tmp_path("gen_c.jsonl");
  CHECK(run({"gen-data", "--spec", spec, "--out", out_c, "--seed", "8"}) == 0);
  CHECK(slurp(out_a) != slurp(out_c));

  CHECK(run({"gen-data", "--spec", spec, "--out", out_a, "--seed", "7", "--json"}, &text) == 0);
  nlohmann::json j = nlohmann::json::parse(text);
  CHECK(j.at("records") == 12);
}

TEST_CASE("gen-data rejects a malformed spec without leaving a partial file") {
  std::string bad = tmp_path("gen_bad_spec.json");
  spit(bad, "{\"count\": -3}");
  std::string out = tmp_path("gen_bad_out.jsonl");
  std::remove(out.c_str());
  CHECK(run({"gen-data", "--spec", bad, "--out", out}) == 2);
  std::ifstream check(out);
  CHECK_FALSE(check.good());

  spit(bad, "not json at all");
  CHECK(run({"gen-data", "--spec", bad, "--out", out}) == 2);
  CHECK(run({"gen-data", "--spec", tmp_path("gen_no_such_spec.json"), "--out", out}) == 2);
}

TEST_CASE("train writes a checkpoint and a per-epoch JSON log") {
  Pipeline& p = pipeline();
  CHECK(checkpoint_config_hash(p.ckpt) == RunConfig::load(p.cfg).hash_hex());

  nlohmann::json log = nlohmann::json::parse(slurp(p.log));
  CHECK(log.at("epochs").size() == 2);
  for (const auto& e : log.at("epochs")) {
    CHECK(e.at("train_loss").get<double>() > 0.0);
    CHECK(e.at("val_mrr").get<double>() > 0.0);
  }
  CHECK(log.at("best_epoch").get<int>() >= 1);
}

TEST_CASE("train maps missing inputs and --resume to the documented exit codes") {
  Pipeline& p = pipeline();
  CHECK(run({"train", "--config", p.cfg, "--train", tmp_path("no_such.jsonl"), "--val", p.val_set,
             "--out", tmp_path("t1.ckpt")}) == 2);
  CHECK(run({"train", "--config", p.cfg, "--train", p.train_set, "--val", p.val_set, "--out",
             tmp_path("t2.ckpt"), "--resume"}) == 1);
}

TEST_CASE("eval reports a single checkpoint and ensembles a comma list") {
  Pipeline& p = pipeline();
  std::string single, ens;
  CHECK(run({"eval", "--model", p.ckpt, "--data", p.val_set}, &single) == 0);
  nlohmann::json rep = nlohmann::json::parse(single);
  CHECK(rep.at("mrr").get<double>() > 0.0);
  CHECK(rep.at("ranks").size() == 24);

  // an ensemble of identical members must reproduce the single model bit-exactly
  CHECK(run({"eval", "--model", p.ckpt + "," + p.ckpt, "--data", p.val_set}, &ens) == 0);
  CHECK(single == ens);
}

TEST_CASE("eval --ndcg requires dense relevance annotations") {
  Pipeline& p = pipeline();
  CHECK(run({"eval", "--model", p.ckpt, "--data", p.val_set, "--ndcg"}) == 2);

  std::string spec = write_spec("ndcg_spec.json", 10, true);
  std::string data = tmp_path("ndcg_val.jsonl");
  REQUIRE(run({"gen-data", "--spec", spec, "--out", data, "--seed", "3"}) == 0);
  std::string text;
  CHECK(run({"eval", "--model", p.ckpt, "--data", data, "--ndcg"}, &text) == 0);
  double score = nlohmann::json::parse(text).at("ndcg").get<double>();
  CHECK(score > 0.0);
  CHECK(score <= 1.0);
}

TEST_CASE("analyze importance prints rows that sum to one") {
  Pipeline& p = pipeline();
  std::string text;
  CHECK(run({"analyze", "importance", "--model", p.ckpt, "--data", p.val_set}, &text) == 0);
  nlohmann::json table = nlohmann::json::parse(text);
  REQUIRE(table.at("importance").size() > 0);
  for (const auto& row : table.at("importance")) {
    double sum = row.at("prior").get<double>() + row.at("local").get<double>();
    for (const auto& [src, share] : row.at("messages").items()) sum += share.get<double>();
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }

  CHECK(run({"analyze", "importance", "--model", p.ckpt, "--data", p.val_set, "--csv"}, &text) ==
        0);
  CHECK(text.find("utility,") == 0);
}

TEST_CASE("analyze attention dumps one belief vector per utility") {
  Pipeline& p = pipeline();
  std::ifstream in(p.val_set);
  std::string line;
  REQUIRE(std::getline(in, line));
  std::string rec_id = nlohmann::json::parse(line).at("record_id").get<std::string>();

  std::string text;
  CHECK(run({"analyze", "attention", "--model", p.ckpt, "--data", p.val_set, "--record", rec_id},
            &text) == 0);
  nlohmann::json dump = nlohmann::json::parse(text);
  CHECK(dump.at("record") == rec_id);
  const auto& beliefs = dump.at("beliefs");
  CHECK(beliefs.at("image").size() == 8);
  CHECK(beliefs.at("answers").size() == 7);
  CHECK(beliefs.contains("question"));
  CHECK(beliefs.contains("caption"));
  CHECK(beliefs.contains("hist_q.1"));
  for (const auto& [name, b] : beliefs.items()) {
    double sum = 0.0;
    for (const auto& v : b) sum += v.get<double>();
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }

  CHECK(run({"analyze", "attention", "--model", p.ckpt, "--data", p.val_set, "--record",
             "no-such-record"}) == 2);
}

TEST_CASE("analyze prune with threshold zero is a no-op on predictions") {
  Pipeline& p = pipeline();
  std::string pruned = tmp_path("pruned0.ckpt");
  std::string text;
  CHECK(run({"analyze", "prune", "--model", p.ckpt, "--data", p.val_set, "--threshold", "0",
             "--out", pruned}, &text) == 0);
  CHECK(nlohmann::json::parse(text).at("pruned").empty());

  std::string before, after;
  CHECK(run({"eval", "--model", p.ckpt, "--data", p.val_set}, &before) == 0);
  CHECK(run({"eval", "--model", pruned, "--data", p.val_set}, &after) == 0);
  CHECK(before == after);
}

TEST_CASE("gradcheck passes on two seeds and catches a corrupted gradient") {
  std::string text;
  CHECK(run({"gradcheck", "--seed", "0", "--json"}, &text) == 0);
  nlohmann::json j = nlohmann::json::parse(text);
  CHECK(j.at("pass") == true);
  CHECK(j.at("max_rel_error").get<double>() < 1e-4);

  CHECK(run({"gradcheck", "--seed", "1"}, &text) == 0);
  CHECK(text.find("(pass)") != std::string::npos);

  CHECK(run({"gradcheck", "--seed", "0", "--corrupt"}, &text) == 3);
  CHECK(text.find("(FAIL)") != std::string::npos);
}

TEST_CASE("usage errors exit with code one") {
  CHECK(run({}) == 1);
  CHECK(run({"no-such-command"}) == 1);
  CHECK(run({"gen-data"}) == 1);                         // missing required flags
  CHECK(run({"eval", "--data", "x.jsonl"}) == 1);        // missing --model
  CHECK(run({"gradcheck", "--bogus-flag"}) == 1);
}
