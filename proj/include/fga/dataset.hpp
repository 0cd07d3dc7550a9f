#ifndef FGA_DATASET_HPP
#define FGA_DATASET_HPP

#include "fga/config.hpp"
#include "fga/encoders.hpp"

namespace fga {

// One dialog instance, already tokenized and padded to the configured
// lengths. `features` rows are regions, columns are feature channels.
struct DialogRecord {
  std::string record_id;
  Mat features;  // n_regions x d_image
  TokenSequence caption;
  TokenSequence question;
  std::vector<std::pair<TokenSequence, TokenSequence>> history;  // <= T rounds
  std::vector<TokenSequence> candidates;                         // n_A entries
  int gt_index = 0;
  std::vector<double> dense_relevance;  // empty or n_A values in [0, 1]
};

// JSONL, one record per line. Image features either inline (base64 of
// little-endian f32, row-major regions x channels) or by reference to a
// sidecar feature file keyed by record_id. Schema violations raise
// ContractError naming the record and field.
std::vector<DialogRecord> load_dataset(const std::string& path, const Vocabulary& vocab,
                                       const RunConfig& cfg);

void save_dataset(const std::string& path, const std::vector<DialogRecord>& records,
                  const Vocabulary& vocab, const RunConfig& cfg);

// Sidecar feature file: header {count, n_regions, d_image}, an index table
// of {record_id, offset} entries, then contiguous f32 blocks.
void write_feature_sidecar(const std::string& path,
                           const std::vector<std::pair<std::string, Mat>>& features);
Mat read_sidecar_features(const std::string& path, const std::string& record_id);

}  // namespace fga

#endif  // FGA_DATASET_HPP
