#ifndef FGA_ATTENTION_HPP
#define FGA_ATTENTION_HPP

#include "fga/autodiff.hpp"
#include "fga/batchnorm.hpp"

#include <set>

namespace fga {

// One node of the factor graph: a d-by-n matrix of entity embeddings.
// `key` is the parameter-sharing group; utilities with the same key use
// the same factor weights (single storage).
struct UtilityDef {
  std::string name;
  std::string key;
  int d = 0;
  int n = 0;
  Mat prior;  // n x 1 fixed potential; empty means zero
};

// Beliefs, attended vectors and the raw (pre-weight) terms retained for
// the importance analysis.
struct AttentionResult {
  std::vector<Tape::Var> belief;
  std::vector<Tape::Var> attended;
  std::vector<Mat> prior_term;                  // p_i
  std::vector<Mat> local_term;                  // psi_i per entity
  std::vector<std::map<int, Mat>> message_term; // source j -> mu_{j->i}, incl j == i
};

// Pairwise factor graph attention: local factors (entity information and
// self interactions), joint factors per enabled pair, one round of message
// aggregation, softmax beliefs, attended vectors.
class FactorGraph {
 public:
  // Registers all factor parameters in `reg`. `pairs` lists the enabled
  // unordered utility pairs by index; null enables every distinct pair.
  FactorGraph(ParamRegistry& reg, std::vector<UtilityDef> defs,
              bool self_factors = true,
              const std::vector<std::pair<int, int>>* pairs = nullptr);

  void init_params(std::mt19937_64& rng);

  // Batch entry point: utilities[r][i] is the i-th utility of record r.
  // Train mode pools batch-norm statistics over every record's score
  // matrix of the same factor.
  std::vector<AttentionResult> run_batch(Tape& t,
                                         const std::vector<std::vector<Tape::Var>>& utilities,
                                         bool train, std::mt19937_64& rng,
                                         double local_dropout = 0.0);

  AttentionResult run(Tape& t, const std::vector<Tape::Var>& utilities, bool train,
                      std::mt19937_64& rng, double local_dropout = 0.0);

  const std::vector<UtilityDef>& defs() const { return defs_; }
  std::map<std::string, BatchNormState>& bn_states() { return bn_; }

  // Message (source -> target) removal: zeroes the scalar and skips the
  // term. Ordered pairs; self messages count as (i, i).
  void prune(int target, int source);
  const std::set<std::pair<int, int>>& pruned() const { return pruned_; }
  bool pair_enabled(int i, int j) const;

  Parameter& prior_weight(int i) { return *w_prior_[i]; }
  Parameter& local_weight(int i) { return *w_local_[i]; }
  Parameter& message_weight(int target, int source);
  std::vector<int> message_sources(int target) const;

 private:
  struct PairParams {
    Parameter* L = nullptr;  // d x d_i, applied to the lower-index side
    Parameter* R = nullptr;  // d x d_j
  };

  Tape::Var local_info(Tape& t, int i, Tape::Var U, bool train, std::mt19937_64& rng,
                       double dropout_rate);
  Tape::Var raw_self_scores(Tape& t, int i, Tape::Var U);
  Tape::Var raw_joint_scores(Tape& t, int i, int j, Tape::Var Ui, Tape::Var Uj);

  ParamRegistry* reg_;
  std::vector<UtilityDef> defs_;
  bool self_factors_;
  std::set<std::pair<int, int>> enabled_;  // unordered, stored i < j
  std::set<std::pair<int, int>> pruned_;   // ordered (target, source)

  // per sharing key
  std::map<std::string, Parameter*> v_, V_, L_, R_;
  std::map<std::pair<std::string, std::string>, PairParams> pair_;
  std::map<std::string, BatchNormState> bn_;
  // per utility / ordered utility pair
  std::vector<Parameter*> w_prior_, w_local_;
  std::map<std::pair<int, int>, Parameter*> w_msg_;  // (target, source)
  std::map<std::pair<int, int>, Parameter*> W_msg_;  // (target, source), n_i x n_j
};

}  // namespace fga

#endif  // FGA_ATTENTION_HPP
