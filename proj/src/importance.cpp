#include "fga/importance.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace fga {

ImportanceTable importance_scores(Model& model, const std::vector<DialogRecord>& val_set) {
  if (val_set.empty()) throw ContractError("importance: empty validation set");
  const bool absolute = model.config().importance_absolute;
  const auto& defs = model.utilities();
  const int m = static_cast<int>(defs.size());

  // accumulate sum and element count of each raw term across the set
  std::vector<double> prior_sum(m, 0.0), local_sum(m, 0.0);
  std::vector<std::map<int, double>> msg_sum(m);
  std::size_t records = 0;
  auto acc = [&](double& slot, const Mat& term) {
    slot += absolute ? term.cwiseAbs().sum() : term.sum();
  };
  for (const auto& rec : val_set) {
    ModelOutput out = model.forward(rec);
    for (int i = 0; i < m; ++i) {
      acc(prior_sum[i], out.prior_term[i]);
      acc(local_sum[i], out.local_term[i]);
      for (const auto& [j, mu] : out.message_term[i]) acc(msg_sum[i][j], mu);
    }
    ++records;
  }

  ImportanceTable table;
  for (int i = 0; i < m; ++i) {
    const double denom_n = static_cast<double>(records) * defs[i].n;
    ImportanceRow row;
    row.utility = defs[i].name;
    double p = std::abs(prior_sum[i] / denom_n * model.graph().prior_weight(i).value(0, 0));
    double l = std::abs(local_sum[i] / denom_n * model.graph().local_weight(i).value(0, 0));
    std::map<int, double> msgs;
    double total = p + l;
    for (const auto& [j, s] : msg_sum[i]) {
      double v = std::abs(s / denom_n * model.graph().message_weight(i, j).value(0, 0));
      msgs[j] = v;
      total += v;
    }
    const int cues = 2 + static_cast<int>(msgs.size());
    auto share = [&](double v) { return total == 0.0 ? 1.0 / cues : v / total; };
    row.prior = share(p);
    row.local = share(l);
    for (const auto& [j, v] : msgs) row.message[defs[j].name] = share(v);
    table.rows.push_back(std::move(row));
  }
  return table;
}

const ImportanceRow& ImportanceTable::row(const std::string& utility) const {
  for (const auto& r : rows)
    if (r.utility == utility) return r;
  throw ContractError("importance: unknown utility " + utility);
}

std::string ImportanceTable::to_json_string(int indent) const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json msgs = nlohmann::json::object();
    for (const auto& [src, v] : r.message) msgs[src] = v;
    arr.push_back(
        {{"utility", r.utility}, {"prior", r.prior}, {"local", r.local}, {"messages", msgs}});
  }
  return nlohmann::json{{"importance", arr}}.dump(indent);
}

std::string ImportanceTable::to_csv() const {
  std::ostringstream ss;
  ss << "utility,cue,score\n";
  for (const auto& r : rows) {
    ss << r.utility << ",prior," << r.prior << "\n";
    ss << r.utility << ",local," << r.local << "\n";
    for (const auto& [src, v] : r.message) ss << r.utility << ",msg:" << src << "," << v << "\n";
  }
  return ss.str();
}

std::vector<std::pair<std::string, std::string>> prune_interactions(
    Model& model, const ImportanceTable& table, double threshold) {
  std::vector<std::pair<std::string, std::string>> pruned;
  for (const auto& r : table.rows)
    for (const auto& [src, score] : r.message)
      if (score < threshold) {
        model.prune_pair(r.utility, src);
        pruned.emplace_back(r.utility, src);
      }
  return pruned;
}

}  // namespace fga
