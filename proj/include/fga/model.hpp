#ifndef FGA_MODEL_HPP
#define FGA_MODEL_HPP

#include "fga/attention.hpp"
#include "fga/config.hpp"
#include "fga/dataset.hpp"

#include <memory>

namespace fga {

// Per-record result of a forward pass. The raw attention terms are kept
// as plain matrices for the importance analysis.
struct ModelOutput {
  Mat probs;          // n_A x 1, sums to 1
  double loss = 0.0;  // -log probs[gt]
  std::vector<Mat> beliefs;                      // per utility
  std::vector<Mat> prior_term;                   // p_i
  std::vector<Mat> local_term;                   // psi_i
  std::vector<std::map<int, Mat>> message_term;  // source -> mu_{j->i}
};

// Full pipeline: embeddings + LSTM/image encoders -> factor graph
// attention -> fused attention representation -> per-candidate MLP ->
// softmax over candidates.
class Model {
 public:
  explicit Model(RunConfig cfg);

  void init_params(std::uint64_t seed);

  const RunConfig& config() const { return cfg_; }
  ParamRegistry& params() { return reg_; }
  const ParamRegistry& params() const { return reg_; }
  FactorGraph& graph() { return *fg_; }

  // Every batch-norm state of the model (attention factors + fusion),
  // keyed by parameter prefix. Used by checkpointing.
  std::map<std::string, BatchNormState*> bn_all();

  // Builds the whole batch onto one tape so factor/fusion batch-norm
  // statistics pool across records. Returns per-record outputs and the
  // mean-loss var for backward().
  std::pair<std::vector<ModelOutput>, Tape::Var> forward_batch(
      Tape& t, const std::vector<DialogRecord>& records, bool train, std::mt19937_64& rng);

  // Eval-mode convenience on an internal tape.
  ModelOutput forward(const DialogRecord& record);

  int utility_index(const std::string& name) const;
  const std::vector<UtilityDef>& utilities() const { return fg_->defs(); }

  // Message removal by utility name; recorded for checkpointing.
  void prune_pair(const std::string& target, const std::string& source);
  std::vector<std::pair<std::string, std::string>> pruned_pairs() const;
  void mark_bn_initialized();

 private:
  std::vector<Tape::Var> encode_record(Tape& t, const DialogRecord& rec, bool train,
                                       std::mt19937_64& rng);
  TokenSequence query_tokens(const DialogRecord& rec) const;
  void validate_record(const DialogRecord& rec) const;

  RunConfig cfg_;
  ParamRegistry reg_;
  int fused_len_ = 0;  // L = d_I + d_Q + d_C + d_A + T * d_round

  Parameter* E_ = nullptr;
  LstmParams lstm_q_, lstm_c_, lstm_hq_, lstm_ha_, lstm_a_;
  Parameter *img_W_ = nullptr, *img_b_ = nullptr;

  std::unique_ptr<FactorGraph> fg_;

  // fusion
  Parameter *fh_W_ = nullptr, *fh_b_ = nullptr;   // per-round history fuser
  Parameter *l1_W_ = nullptr, *l1_b_ = nullptr;   // (L+d_A) -> (L+d_A)/2
  Parameter *l2_W_ = nullptr, *l2_b_ = nullptr;   // -> (L+d_A)/4
  Parameter* out_W_ = nullptr;  // -> 1; no bias: a bias is a uniform logit
                                // shift the candidate softmax ignores
  BatchNormState fus_bn1_, fus_bn2_;
};

// -log(probs[gt]); gt out of range raises ContractError.
double nll_loss(const Mat& probs, int gt_index);

}  // namespace fga

#endif  // FGA_MODEL_HPP
