#include "fga/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fga {

int rank_of(const Mat& probs, int gt_index) {
  if (probs.cols() != 1 || probs.rows() < 1) throw ContractError("rank_of: probs must be n x 1");
  if (gt_index < 0 || gt_index >= probs.rows()) throw ContractError("rank_of: gt out of range");
  const double p = probs(gt_index, 0);
  int rank = 1;
  for (int j = 0; j < probs.rows(); ++j) {
    if (probs(j, 0) > p) ++rank;
    else if (probs(j, 0) == p && j < gt_index) ++rank;  // lower index wins ties
  }
  return rank;
}

EvalReport metrics(const std::vector<int>& ranks) {
  if (ranks.empty()) throw ContractError("metrics: no ranks");
  EvalReport rep;
  rep.ranks = ranks;
  const double n = static_cast<double>(ranks.size());
  for (int r : ranks) {
    if (r < 1) throw ContractError("metrics: ranks are 1-based");
    rep.mrr += 1.0 / r;
    rep.r_at_1 += r <= 1;
    rep.r_at_5 += r <= 5;
    rep.r_at_10 += r <= 10;
    rep.mean_rank += r;
  }
  rep.mrr /= n;
  rep.r_at_1 /= n;
  rep.r_at_5 /= n;
  rep.r_at_10 /= n;
  rep.mean_rank /= n;
  return rep;
}

double ndcg(const Mat& probs, const std::vector<double>& relevance) {
  if (probs.cols() != 1 || static_cast<int>(relevance.size()) != probs.rows())
    throw ContractError("ndcg: relevance length must match probs");
  const int n = probs.rows();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return probs(a, 0) > probs(b, 0); });
  double dcg = 0.0;
  for (int pos = 0; pos < n; ++pos)
    dcg += relevance[order[pos]] / std::log2(pos + 2.0);

  std::vector<double> ideal = relevance;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (int pos = 0; pos < n; ++pos) idcg += ideal[pos] / std::log2(pos + 2.0);
  return idcg == 0.0 ? 0.0 : dcg / idcg;
}

std::string EvalReport::to_json_string(int indent) const {
  nlohmann::json j{{"mrr", mrr},
                   {"r@1", r_at_1},
                   {"r@5", r_at_5},
                   {"r@10", r_at_10},
                   {"mean_rank", mean_rank},
                   {"ranks", ranks}};
  if (ndcg) j["ndcg"] = *ndcg;
  return j.dump(indent);
}

std::string EvalReport::to_csv() const {
  std::ostringstream ss;
  ss << "metric,value\n";
  ss << "mrr," << mrr << "\n";
  ss << "r@1," << r_at_1 << "\n";
  ss << "r@5," << r_at_5 << "\n";
  ss << "r@10," << r_at_10 << "\n";
  ss << "mean_rank," << mean_rank << "\n";
  if (ndcg) ss << "ndcg," << *ndcg << "\n";
  return ss.str();
}

}  // namespace fga
