#ifndef FGA_IMPORTANCE_HPP
#define FGA_IMPORTANCE_HPP

#include "fga/model.hpp"

#include <optional>

namespace fga {

// Normalized cue magnitudes per target utility: S(cue) = |m_cue * w_cue| /
// sum over cues, where m is the mean raw (pre-weight) term over every
// validation record and entity. Cues are the prior, the local information
// and one message per source (self included).
struct ImportanceRow {
  std::string utility;
  double prior = 0.0;
  double local = 0.0;
  std::map<std::string, double> message;  // source utility -> score
};

struct ImportanceTable {
  std::vector<ImportanceRow> rows;

  std::string to_json_string(int indent = -1) const;
  std::string to_csv() const;
  const ImportanceRow& row(const std::string& utility) const;
};

// config.importance_absolute switches m to the mean absolute term.
ImportanceTable importance_scores(Model& model, const std::vector<DialogRecord>& val_set);

// Disables every message (target, source) whose score is strictly below
// the threshold; returns the pruned pairs.
std::vector<std::pair<std::string, std::string>> prune_interactions(
    Model& model, const ImportanceTable& table, double threshold);

}  // namespace fga

#endif  // FGA_IMPORTANCE_HPP
