#ifndef FGA_METRICS_HPP
#define FGA_METRICS_HPP

#include "fga/autodiff.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fga {

// Retrieval metrics over ranked candidate lists. Recall values are
// fractions in [0, 1].
struct EvalReport {
  double mrr = 0.0;
  double r_at_1 = 0.0;
  double r_at_5 = 0.0;
  double r_at_10 = 0.0;
  double mean_rank = 0.0;
  std::optional<double> ndcg;
  std::vector<int> ranks;  // per record, 1-based

  std::string to_json_string(int indent = -1) const;
  std::string to_csv() const;
};

// 1-based rank of the ground-truth candidate under descending probability;
// ties broken by candidate index (lower index wins).
int rank_of(const Mat& probs, int gt_index);

EvalReport metrics(const std::vector<int>& ranks);

// Standard NDCG: gains are the provided relevances, discount 1/log2(pos+1),
// ideal ordering by descending relevance. All-zero relevance is 0.
double ndcg(const Mat& probs, const std::vector<double>& relevance);

}  // namespace fga

#endif  // FGA_METRICS_HPP
