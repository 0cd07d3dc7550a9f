#include "fga/synthetic.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace fga {

namespace {

constexpr int kKeys = 6;
constexpr int kFillers = 24;

int key_id(int k) { return 2 + k; }         // key0..key5
int cap_id(int k) { return 8 + k; }         // cap0..cap5
int ans_id(int k) { return 14 + k; }        // ans0..ans5
int qst_id(int k) { return 20 + k; }        // qst0..qst5
int filler_id(int i) { return 26 + i; }     // w0..w23

}  // namespace

Vocabulary synthetic_vocab() {
  std::vector<std::string> toks;
  for (const char* stem : {"key", "cap", "ans", "qst"})
    for (int k = 0; k < kKeys; ++k) toks.push_back(stem + std::to_string(k));
  for (int i = 0; i < kFillers; ++i) toks.push_back("w" + std::to_string(i));
  return Vocabulary(toks);
}

void GenSpec::validate() const {
  if (count < 0) throw ContractError("gen spec: count must be >= 0");
  if (n_candidates < kKeys + 1)
    throw ContractError("gen spec: n_candidates must be >= " + std::to_string(kKeys + 1));
  if (history_rounds < 1) throw ContractError("gen spec: history_rounds must be >= 1");
  if (n_regions < kKeys)
    throw ContractError("gen spec: n_regions must be >= " + std::to_string(kKeys));
  if (d_image < kKeys)
    throw ContractError("gen spec: d_image must be >= " + std::to_string(kKeys));
  if (mode != "answer" && mode != "question")
    throw ContractError("gen spec: mode must be \"answer\" or \"question\"");
  if (amplitude <= 0 || noise < 0) throw ContractError("gen spec: bad amplitude/noise");
}

GenSpec GenSpec::from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("gen spec: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ContractError("gen spec: expected a JSON object");
  GenSpec s;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("count", s.count);
    get("n_candidates", s.n_candidates);
    get("history_rounds", s.history_rounds);
    get("n_regions", s.n_regions);
    get("d_image", s.d_image);
    get("mode", s.mode);
    get("amplitude", s.amplitude);
    get("noise", s.noise);
    get("dense_relevance", s.dense_relevance);
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("gen spec: bad field type: ") + e.what());
  }
  s.validate();
  return s;
}

GenSpec GenSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("gen spec: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

std::vector<DialogRecord> generate_synthetic(const GenSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> any_key(0, kKeys - 1);
  std::uniform_int_distribution<int> any_filler(0, kFillers - 1);
  std::normal_distribution<double> gauss(0.0, spec.noise);
  auto flip = [&] { return (rng() & 1) != 0; };
  auto w = [&] { return filler_id(any_filler(rng)); };

  std::vector<DialogRecord> out;
  out.reserve(spec.count);
  for (int idx = 0; idx < spec.count; ++idx) {
    DialogRecord rec;
    rec.record_id = "syn-" + std::to_string(seed) + "-" + std::to_string(idx);

    // kb is the planted class; ka/kd are distinct distractors
    int keys[3];
    for (int i = 0; i < 3; ++i) {
      bool fresh;
      do {
        keys[i] = any_key(rng);
        fresh = true;
        for (int p = 0; p < i; ++p) fresh = fresh && keys[p] != keys[i];
      } while (!fresh);
    }
    const int kb = keys[0], ka = keys[1], kd = keys[2];

    rec.features = Mat::Zero(spec.n_regions, spec.d_image);
    for (int r = 0; r < spec.n_regions; ++r)
      for (int c = 0; c < spec.d_image; ++c) rec.features(r, c) = gauss(rng);
    // every key except the question distractor ka owns one region, so an
    // unconditioned mixture of regions carries no class information and
    // only question-conditioned attention can isolate kb
    std::vector<int> region_of(spec.n_regions);
    std::iota(region_of.begin(), region_of.end(), 0);
    std::shuffle(region_of.begin(), region_of.end(), rng);
    int slot = 0;
    for (int k = 0; k < kKeys; ++k)
      if (k != ka) rec.features(region_of[slot++], k) += spec.amplitude;
    rec.features = rec.features.cast<float>().cast<double>();  // f32 round trip

    auto key_pair = [&](int first, int second, auto to_id) {
      std::vector<int> ids = {to_id(first), to_id(second)};
      if (flip()) std::swap(ids[0], ids[1]);
      return ids;
    };
    std::vector<int> q_keys = key_pair(kb, ka, key_id);
    std::vector<int> c_keys = key_pair(kb, kd, cap_id);
    rec.caption = TokenSequence::from_ids({c_keys[0], c_keys[1]});

    for (int h = 0; h < spec.history_rounds; ++h) {
      TokenSequence hq = TokenSequence::from_ids({qst_id(any_key(rng))});
      TokenSequence ha = TokenSequence::from_ids({w()});
      rec.history.push_back({std::move(hq), std::move(ha)});
    }
    if (spec.mode == "answer") {
      rec.question = TokenSequence::from_ids({q_keys[0], q_keys[1]});
    } else {
      // the query is the previous interaction: plant the keys there
      rec.question = TokenSequence::from_ids({w(), w()});
      rec.history.back().first = TokenSequence::from_ids({q_keys[0], q_keys[1]});
    }

    auto target_id = spec.mode == "answer" ? ans_id : qst_id;
    std::vector<TokenSequence> cands;
    for (int k = 0; k < kKeys; ++k)
      cands.push_back(TokenSequence::from_ids({target_id(k)}));
    for (int extra = kKeys; extra < spec.n_candidates; ++extra)
      cands.push_back(TokenSequence::from_ids({w()}));
    std::shuffle(cands.begin(), cands.end(), rng);
    for (int u = 0; u < spec.n_candidates; ++u)
      if (cands[u].ids[0] == target_id(kb)) rec.gt_index = u;
    rec.candidates = std::move(cands);

    if (spec.dense_relevance) {
      rec.dense_relevance.assign(spec.n_candidates, 0.0);
      for (int u = 0; u < spec.n_candidates; ++u) {
        int first = rec.candidates[u].ids[0];
        if (first == target_id(kb)) rec.dense_relevance[u] = 1.0;
        else if (first == target_id(ka) || first == target_id(kd))
          rec.dense_relevance[u] = 0.2;
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

int oracle_choice(const DialogRecord& rec, const GenSpec& spec) {
  // keys visible in the image: axes carrying an implausibly large value
  std::set<int> image_keys;
  for (int r = 0; r < rec.features.rows(); ++r)
    for (int k = 0; k < kKeys; ++k)
      if (rec.features(r, k) > spec.amplitude / 2.0) image_keys.insert(k);

  const std::vector<int>& query_ids =
      spec.mode == "answer" ? rec.question.ids : rec.history.back().first.ids;
  int kb = -1;
  for (int id : query_ids) {
    int k = id - key_id(0);
    if (k >= 0 && k < kKeys && image_keys.count(k)) kb = k;
  }
  if (kb < 0) throw ContractError("oracle: no key satisfies the planted rule");

  const int want = spec.mode == "answer" ? ans_id(kb) : qst_id(kb);
  for (int u = 0; u < static_cast<int>(rec.candidates.size()); ++u)
    if (rec.candidates[u].ids[0] == want) return u;
  throw ContractError("oracle: no candidate carries the planted key");
}

RunConfig synthetic_config(const GenSpec& spec) {
  RunConfig c;
  c.d_embed = 16;
  c.d_question = 32;
  c.d_caption = 16;
  c.d_hist = 16;
  c.d_answer = 32;
  c.d_image = spec.d_image;
  c.d_round = 16;
  c.n_question = 3;
  c.n_caption = 2;
  c.n_answer_words = 1;
  c.n_hist = 2;
  c.history_rounds = spec.history_rounds;
  c.n_candidates = spec.n_candidates;
  c.n_regions = spec.n_regions;
  c.vocab_size = synthetic_vocab().size();
  c.batch_size = 16;
  c.lr = 1e-3;
  c.epochs = 50;
  c.dropout_image = 0.1;
  c.dropout_fusion = 0.1;
  c.dropout_local = 0.0;
  c.mode = spec.mode;
  return c;
}

}  // namespace fga
