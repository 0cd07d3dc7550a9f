#ifndef FGA_CONFIG_HPP
#define FGA_CONFIG_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace fga {

// Single source of truth for model dimensions and training settings.
// Serializes canonically to JSON; the hash of the canonical form is
// embedded in checkpoints and must match across an ensemble.
struct RunConfig {
  // embedding dims
  int d_embed = 128;
  int d_question = 512;
  int d_caption = 128;
  int d_hist = 128;
  int d_answer = 512;
  int d_image = 512;  // region feature channels; the 1x1 map is square
  int d_round = 128;  // fused history dim per round

  // entity counts
  int n_question = 20;
  int n_caption = 20;
  int n_answer_words = 20;
  int n_hist = 20;
  int history_rounds = 10;  // T
  int n_candidates = 100;   // n_A
  int n_regions = 49;       // n_I
  int vocab_size = 0;

  // optimizer / training
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 64;
  int epochs = 4;
  std::uint64_t seed = 0;

  // dropout rates
  double dropout_image = 0.5;
  double dropout_fusion = 0.3;
  double dropout_local = 0.2;

  // behavior
  std::string mode = "answer";  // "answer" or "question"
  bool self_factors = true;
  std::vector<std::pair<std::string, std::string>> enabled_pairs;  // empty = all
  bool importance_absolute = false;  // |term| variant of the cue mean

  std::string to_json_string(int indent = -1) const;
  static RunConfig from_json_string(const std::string& text);
  static RunConfig load(const std::string& path);
  void save(const std::string& path) const;

  // FNV-1a over the canonical serialization
  std::string hash_hex() const;
  void validate() const;
};

}  // namespace fga

#endif  // FGA_CONFIG_HPP
