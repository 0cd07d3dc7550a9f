#include "fga/cli.hpp"

#include "fga/checkpoint.hpp"
#include "fga/ensemble.hpp"
#include "fga/grad_check.hpp"
#include "fga/importance.hpp"
#include "fga/init.hpp"
#include "fga/synthetic.hpp"
#include "fga/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>

namespace fga {

namespace {

constexpr int kOk = 0, kUsage = 1, kData = 2, kNumeric = 3;

int eval_workers() {
  const char* env = std::getenv("FGA_NUM_WORKERS");
  if (!env) return 1;
  int n = std::atoi(env);
  return n < 1 ? 1 : n;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t at = 0;
  while (at <= s.size()) {
    std::size_t next = s.find(',', at);
    if (next == std::string::npos) next = s.size();
    if (next > at) out.push_back(s.substr(at, next - at));
    at = next + 1;
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ContractError("cannot write " + path);
  out << text;
}

int cmd_gen_data(const std::string& spec_path, const std::string& out_path, std::uint64_t seed,
                 bool as_json) {
  GenSpec spec = GenSpec::load(spec_path);
  auto records = generate_synthetic(spec, seed);  // fails before any file is touched
  save_dataset(out_path, records, synthetic_vocab(), synthetic_config(spec));
  if (as_json)
    std::cout << nlohmann::json{{"records", records.size()}, {"out", out_path}}.dump() << "\n";
  else
    std::cout << "wrote " << records.size() << " records to " << out_path << "\n";
  return kOk;
}

int cmd_train(const std::string& config_path, const std::string& train_path,
              const std::string& val_path, const std::string& out_path,
              const std::string& log_path, std::int64_t seed, int epochs) {
  RunConfig cfg = RunConfig::load(config_path);
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  if (epochs >= 0) cfg.epochs = epochs;
  Vocabulary vocab = synthetic_vocab();
  auto train_set = load_dataset(train_path, vocab, cfg);
  auto val_set = load_dataset(val_path, vocab, cfg);
  Model model(cfg);
  model.init_params(cfg.seed);
  TrainResult result = train(model, train_set, val_set, out_path);
  std::string log = result.to_json_string(2);
  if (!log_path.empty()) write_text(log_path, log + "\n");
  std::cout << log << "\n";
  return kOk;
}

int cmd_eval(const std::string& model_list, const std::string& data_path, bool with_ndcg) {
  std::vector<std::string> paths = split_commas(model_list);
  if (paths.empty()) throw ContractError("eval: no checkpoints given");
  std::vector<std::unique_ptr<Model>> models;
  for (const auto& p : paths) models.push_back(load_checkpoint(p));
  Vocabulary vocab = synthetic_vocab();
  auto data = load_dataset(data_path, vocab, models[0]->config());
  if (data.empty()) throw ContractError("eval: empty dataset " + data_path);

  EvalReport rep;
  if (models.size() == 1) {
    rep = evaluate(*models[0], data, with_ndcg, eval_workers());
  } else {
    std::vector<Model*> ptrs;
    for (auto& m : models) ptrs.push_back(m.get());
    std::sort(data.begin(), data.end(), [](const DialogRecord& a, const DialogRecord& b) {
      return a.record_id < b.record_id;
    });
    std::vector<int> ranks;
    double gain = 0.0;
    for (const auto& rec : data) {
      Mat probs = ensemble_predict(ptrs, rec);
      ranks.push_back(rank_of(probs, rec.gt_index));
      if (with_ndcg) {
        if (rec.dense_relevance.empty())
          throw ContractError("eval: record " + rec.record_id + " has no dense_relevance");
        gain += ndcg(probs, rec.dense_relevance);
      }
    }
    rep = metrics(ranks);
    if (with_ndcg) rep.ndcg = gain / static_cast<double>(data.size());
  }
  std::cout << rep.to_json_string(2) << "\n";
  return kOk;
}

int cmd_analyze(const std::string& what, const std::string& model_path,
                const std::string& data_path, const std::string& record_id, double threshold,
                const std::string& out_path, bool as_csv) {
  auto model = load_checkpoint(model_path);
  Vocabulary vocab = synthetic_vocab();
  auto data = load_dataset(data_path, vocab, model->config());

  if (what == "importance") {
    ImportanceTable table = importance_scores(*model, data);
    std::cout << (as_csv ? table.to_csv() : table.to_json_string(2) + "\n");
    return kOk;
  }
  if (what == "attention") {
    for (const auto& rec : data) {
      if (rec.record_id != record_id) continue;
      ModelOutput out = model->forward(rec);
      nlohmann::json beliefs = nlohmann::json::object();
      const auto& defs = model->utilities();
      for (std::size_t i = 0; i < defs.size(); ++i) {
        std::vector<double> b(out.beliefs[i].data(), out.beliefs[i].data() + out.beliefs[i].size());
        beliefs[defs[i].name] = b;
      }
      std::cout << nlohmann::json{{"record", record_id}, {"beliefs", beliefs}}.dump(2) << "\n";
      return kOk;
    }
    throw ContractError("analyze: no record with id " + record_id);
  }
  if (what == "prune") {
    ImportanceTable table = importance_scores(*model, data);
    auto pruned = prune_interactions(*model, table, threshold);
    save_checkpoint(out_path, *model);
    nlohmann::json removed = nlohmann::json::array();
    for (const auto& [t, s] : pruned) removed.push_back({t, s});
    std::cout << nlohmann::json{{"pruned", removed}, {"out", out_path}}.dump(2) << "\n";
    return kOk;
  }
  throw ContractError("analyze: unknown mode " + what);
}

RunConfig gradcheck_config() {
  RunConfig c;  // toy graph: image 6x8, question 5, caption 4, n_A 6, T=1
  c.d_embed = 4;
  c.d_question = 6;
  c.d_caption = 5;
  c.d_hist = 4;
  c.d_answer = 6;
  c.d_image = 8;
  c.d_round = 4;
  c.n_question = 5;
  c.n_caption = 4;
  c.n_answer_words = 2;
  c.n_hist = 2;
  c.history_rounds = 1;
  c.n_candidates = 6;
  c.n_regions = 6;
  c.vocab_size = 10;
  c.dropout_image = 0.0;
  c.dropout_fusion = 0.0;
  c.dropout_local = 0.0;
  return c;
}

int cmd_gradcheck(std::uint64_t seed, bool corrupt, bool as_json) {
  RunConfig cfg = gradcheck_config();
  Model model(cfg);
  model.init_params(seed);
  std::mt19937_64 rng(seed + 1);
  // a generic point: neutral message weights leave some logit shifts
  // exactly invariant, flooring the finite-difference signal
  for (auto& [name, p] : model.params())
    if (name.rfind("fga.W.", 0) == 0) fill_normal(p->value, 0.5, rng);

  std::uniform_int_distribution<int> tok(1, cfg.vocab_size - 1);
  auto seq = [&](int n) {
    std::vector<int> ids(n);
    for (int& id : ids) id = tok(rng);
    return TokenSequence::from_ids(std::move(ids));
  };
  std::vector<DialogRecord> batch;
  for (int r = 0; r < 2; ++r) {
    DialogRecord rec;
    rec.record_id = "gradcheck-" + std::to_string(r);
    rec.features = Mat::Zero(cfg.n_regions, cfg.d_image);
    fill_normal(rec.features, 1.0, rng);
    rec.caption = seq(cfg.n_caption);
    rec.question = seq(cfg.n_question);
    rec.history.push_back({seq(cfg.n_hist), seq(cfg.n_hist)});
    for (int u = 0; u < cfg.n_candidates; ++u) rec.candidates.push_back(seq(cfg.n_answer_words));
    rec.gt_index = r;
    batch.push_back(std::move(rec));
  }

  auto f = [&](bool want_grad) {
    Tape t;
    std::mt19937_64 fwd_rng(0);
    auto [outs, loss] = model.forward_batch(t, batch, true, fwd_rng);
    // check a scaled objective: finite-difference roundoff grows with |f|,
    // and at |loss|~ln(n_A) it swamps the 1e-8 denominator floor wherever a
    // coordinate's true gradient is tiny or exactly zero
    Tape::Var obj = t.scale(loss, 1e-3);
    double v = t.val(obj)(0, 0);
    if (want_grad) {
      t.backward(obj);
      if (corrupt)  // negative control: break one accumulated gradient
        model.params().begin()->second->grad(0, 0) += 0.01;
    }
    return v;
  };
  double err = grad_check(f, model.params());
  bool pass = err < 1e-4;
  if (as_json)
    std::cout << nlohmann::json{{"max_rel_error", err}, {"pass", pass}}.dump() << "\n";
  else
    std::cout << "max relative error " << err << (pass ? " (pass)" : " (FAIL)") << "\n";
  return pass ? kOk : kNumeric;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"factor graph attention for visual dialog"};
  app.require_subcommand(1);
  bool as_json = false;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  std::string gen_spec, gen_out;
  std::uint64_t gen_seed = 0;
  gen->add_option("--spec", gen_spec, "generator spec JSON")->required();
  gen->add_option("--out", gen_out, "output JSONL path")->required();
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_flag("--json", as_json, "machine-readable stdout");

  auto* tr = app.add_subcommand("train", "train a model");
  std::string tr_config, tr_train, tr_val, tr_out, tr_log;
  std::int64_t tr_seed = -1;
  int tr_epochs = -1;
  bool tr_resume = false;
  tr->add_option("--config", tr_config, "run config JSON")->required();
  tr->add_option("--train", tr_train, "training JSONL")->required();
  tr->add_option("--val", tr_val, "validation JSONL")->required();
  tr->add_option("--out", tr_out, "checkpoint path")->required();
  tr->add_option("--log", tr_log, "write the epoch log JSON here too");
  tr->add_option("--seed", tr_seed, "override config seed");
  tr->add_option("--epochs", tr_epochs, "override config epochs");
  tr->add_flag("--resume", tr_resume, "not supported");

  auto* ev = app.add_subcommand("eval", "evaluate one checkpoint or an ensemble");
  std::string ev_models, ev_data;
  bool ev_ndcg = false;
  ev->add_option("--model", ev_models, "checkpoint path, or comma list for an ensemble")
      ->required();
  ev->add_option("--data", ev_data, "dataset JSONL")->required();
  ev->add_flag("--ndcg", ev_ndcg, "also report NDCG (needs dense_relevance)");

  auto* an = app.add_subcommand("analyze", "importance | attention | prune");
  std::string an_what, an_model, an_data, an_record, an_out;
  double an_threshold = 0.0;
  bool an_csv = false;
  an->add_option("mode", an_what, "importance, attention or prune")->required();
  an->add_option("--model", an_model, "checkpoint path")->required();
  an->add_option("--data", an_data, "dataset JSONL")->required();
  an->add_option("--record", an_record, "record id (attention mode)");
  an->add_option("--threshold", an_threshold, "importance cutoff (prune mode)");
  an->add_option("--out", an_out, "pruned checkpoint path (prune mode)");
  an->add_flag("--csv", an_csv, "CSV instead of JSON");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check at toy dims");
  std::uint64_t gc_seed = 0;
  bool gc_corrupt = false;
  gc->add_option("--seed", gc_seed, "parameter seed");
  gc->add_flag("--corrupt", gc_corrupt, "negative control: corrupt one gradient");
  gc->add_flag("--json", as_json, "machine-readable stdout");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_spec, gen_out, gen_seed, as_json);
    if (tr->parsed()) {
      if (tr_resume) {
        std::cerr << "train: --resume is not supported; restart from a config instead\n";
        return kUsage;
      }
      return cmd_train(tr_config, tr_train, tr_val, tr_out, tr_log, tr_seed, tr_epochs);
    }
    if (ev->parsed()) return cmd_eval(ev_models, ev_data, ev_ndcg);
    if (an->parsed()) {
      if (an_what == "attention" && an_record.empty()) {
        std::cerr << "analyze attention: --record is required\n";
        return kUsage;
      }
      if (an_what == "prune" && an_out.empty()) {
        std::cerr << "analyze prune: --out is required\n";
        return kUsage;
      }
      return cmd_analyze(an_what, an_model, an_data, an_record, an_threshold, an_out, an_csv);
    }
    if (gc->parsed()) return cmd_gradcheck(gc_seed, gc_corrupt, as_json);
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  }
  return kUsage;
}

}  // namespace fga
