#ifndef FGA_TRAINER_HPP
#define FGA_TRAINER_HPP

#include "fga/metrics.hpp"
#include "fga/model.hpp"

namespace fga {

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_mrr = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> log;
  int best_epoch = 0;
  double best_val_mrr = 0.0;

  std::string to_json_string(int indent = -1) const;
};

// Eval-mode forward over every record, ranks reduced in record_id order.
// `workers` > 1 shares the frozen model read-only across threads.
EvalReport evaluate(Model& model, const std::vector<DialogRecord>& data,
                    bool with_ndcg = false, int workers = 1);

// Epoch loop with shuffled batches and Adam; keeps the checkpoint with the
// best validation MRR at `ckpt_path` and reloads it into `model` at the
// end, so the in-memory model equals the returned checkpoint bit-exactly.
// Deterministic given (seed, config, data). Non-finite loss aborts with
// NumericError. Zero epochs checkpoint the initialization.
TrainResult train(Model& model, const std::vector<DialogRecord>& train_set,
                  const std::vector<DialogRecord>& val_set, const std::string& ckpt_path);

}  // namespace fga

#endif  // FGA_TRAINER_HPP
