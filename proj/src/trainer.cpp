#include "fga/trainer.hpp"

#include "fga/adam.hpp"
#include "fga/checkpoint.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace fga {

std::string TrainResult::to_json_string(int indent) const {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : log)
    epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_mrr", e.val_mrr}});
  nlohmann::json j{
      {"epochs", epochs}, {"best_epoch", best_epoch}, {"best_val_mrr", best_val_mrr}};
  return j.dump(indent);
}

EvalReport evaluate(Model& model, const std::vector<DialogRecord>& data, bool with_ndcg,
                    int workers) {
  if (data.empty()) throw ContractError("evaluate: empty dataset");
  // fixed reduction order regardless of input or worker scheduling
  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return data[a].record_id < data[b].record_id;
  });

  const int n = static_cast<int>(data.size());
  std::vector<int> ranks(n);
  std::vector<double> gains(n, 0.0);
  auto run = [&](int from, int to) {
    for (int k = from; k < to; ++k) {
      const DialogRecord& rec = data[order[k]];
      ModelOutput out = model.forward(rec);
      ranks[k] = rank_of(out.probs, rec.gt_index);
      if (with_ndcg) {
        if (rec.dense_relevance.empty())
          throw ContractError("evaluate: record " + rec.record_id + " has no dense_relevance");
        gains[k] = ndcg(out.probs, rec.dense_relevance);
      }
    }
  };
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    run(0, n);
  } else {
    std::vector<std::thread> pool;
    int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back(run, std::min(w * chunk, n), std::min((w + 1) * chunk, n));
    for (auto& th : pool) th.join();
  }

  EvalReport rep = metrics(ranks);
  if (with_ndcg)
    rep.ndcg = std::accumulate(gains.begin(), gains.end(), 0.0) / n;
  return rep;
}

TrainResult train(Model& model, const std::vector<DialogRecord>& train_set,
                  const std::vector<DialogRecord>& val_set, const std::string& ckpt_path) {
  const RunConfig& cfg = model.config();
  if (val_set.empty()) throw ContractError("train: empty validation set");
  TrainResult result;

  if (cfg.epochs == 0 || train_set.empty()) {
    save_checkpoint(ckpt_path, model);
    result.best_val_mrr = evaluate(model, val_set).mrr;
    result.log.push_back({0, 0.0, result.best_val_mrr});
    return result;
  }

  Adam opt(cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
  std::mt19937_64 rng(cfg.seed);
  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  double best = -1.0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
      std::vector<DialogRecord> batch;
      for (std::size_t k = at; k < std::min(at + cfg.batch_size, order.size()); ++k)
        batch.push_back(train_set[order[k]]);
      Tape t;
      auto [outs, loss] = model.forward_batch(t, batch, true, rng);
      const double v = t.val(loss)(0, 0);
      if (!std::isfinite(v))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
      t.backward(loss);
      opt.step(model.params());
      loss_sum += v;
      ++batches;
    }
    const double val_mrr = evaluate(model, val_set).mrr;
    result.log.push_back({epoch, loss_sum / batches, val_mrr});
    if (val_mrr > best) {
      best = val_mrr;
      result.best_epoch = epoch;
      save_checkpoint(ckpt_path, model);  // also quantizes the live model
    }
  }
  result.best_val_mrr = best;
  load_checkpoint_into(ckpt_path, model);
  return result;
}

}  // namespace fga
