#ifndef FGA_SYNTHETIC_HPP
#define FGA_SYNTHETIC_HPP

#include "fga/dataset.hpp"

namespace fga {

// Planted-rule generator. Every record hides one "class" key kb in three
// places: two question tokens (key_kb plus a distractor key_ka), image
// region directions (one axis per key EXCEPT ka) and two caption tokens
// (cap_kb plus cap_kd). The unconditioned sum of image regions carries no
// class information — kb is identified only as the question key that also
// appears in the image, so the task needs question-conditioned image
// attention. The correct candidate carries the token ans_kb (qst_kb in
// question mode, where the key tokens sit in the last history round
// instead of the current question).
struct GenSpec {
  int count = 200;
  int n_candidates = 10;  // >= 7: six key candidates + filler decoys
  int history_rounds = 2;
  int n_regions = 8;
  int d_image = 16;  // >= number of keys (6)
  std::string mode = "answer";
  double amplitude = 3.0;  // planted direction strength
  double noise = 0.1;
  bool dense_relevance = false;

  static GenSpec from_json_string(const std::string& text);
  static GenSpec load(const std::string& path);
  void validate() const;
};

// Fixed 50-token vocabulary shared by every synthetic dataset:
// <pad>, <unk>, key0-5, cap0-5, ans0-5, qst0-5, w0-23.
Vocabulary synthetic_vocab();

// Deterministic per (spec, seed); features pre-rounded to f32 so datasets
// round-trip bit-exactly through the JSONL format.
std::vector<DialogRecord> generate_synthetic(const GenSpec& spec, std::uint64_t seed);

// Rule-following solver (no learning): recovers kb from the token/region
// intersection and returns the index of the matching candidate.
int oracle_choice(const DialogRecord& rec, const GenSpec& spec);

// Model configuration sized for the synthetic task.
RunConfig synthetic_config(const GenSpec& spec);

}  // namespace fga

#endif  // FGA_SYNTHETIC_HPP
