#include "fga/config.hpp"

#include "fga/autodiff.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace fga {

namespace {

using nlohmann::json;

json to_json(const RunConfig& c) {
  json pairs = json::array();
  for (const auto& [a, b] : c.enabled_pairs) pairs.push_back({a, b});
  // nlohmann's default object is name-sorted, so dump() is canonical
  return json{{"adam_eps", c.adam_eps},
              {"batch_size", c.batch_size},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"d_answer", c.d_answer},
              {"d_caption", c.d_caption},
              {"d_embed", c.d_embed},
              {"d_hist", c.d_hist},
              {"d_image", c.d_image},
              {"d_question", c.d_question},
              {"d_round", c.d_round},
              {"dropout_fusion", c.dropout_fusion},
              {"dropout_image", c.dropout_image},
              {"dropout_local", c.dropout_local},
              {"enabled_pairs", pairs},
              {"epochs", c.epochs},
              {"history_rounds", c.history_rounds},
              {"importance_absolute", c.importance_absolute},
              {"lr", c.lr},
              {"mode", c.mode},
              {"n_answer_words", c.n_answer_words},
              {"n_candidates", c.n_candidates},
              {"n_caption", c.n_caption},
              {"n_hist", c.n_hist},
              {"n_question", c.n_question},
              {"n_regions", c.n_regions},
              {"seed", c.seed},
              {"self_factors", c.self_factors},
              {"vocab_size", c.vocab_size}};
}

}  // namespace

std::string RunConfig::to_json_string(int indent) const {
  return to_json(*this).dump(indent);
}

RunConfig RunConfig::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ContractError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ContractError("config: expected a JSON object");
  RunConfig c;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("d_embed", c.d_embed);
    get("d_question", c.d_question);
    get("d_caption", c.d_caption);
    get("d_hist", c.d_hist);
    get("d_answer", c.d_answer);
    get("d_image", c.d_image);
    get("d_round", c.d_round);
    get("n_question", c.n_question);
    get("n_caption", c.n_caption);
    get("n_answer_words", c.n_answer_words);
    get("n_hist", c.n_hist);
    get("history_rounds", c.history_rounds);
    get("n_candidates", c.n_candidates);
    get("n_regions", c.n_regions);
    get("vocab_size", c.vocab_size);
    get("lr", c.lr);
    get("beta1", c.beta1);
    get("beta2", c.beta2);
    get("adam_eps", c.adam_eps);
    get("batch_size", c.batch_size);
    get("epochs", c.epochs);
    get("seed", c.seed);
    get("dropout_image", c.dropout_image);
    get("dropout_fusion", c.dropout_fusion);
    get("dropout_local", c.dropout_local);
    get("mode", c.mode);
    get("self_factors", c.self_factors);
    get("importance_absolute", c.importance_absolute);
    if (j.contains("enabled_pairs")) {
      for (const auto& p : j.at("enabled_pairs")) {
        if (!p.is_array() || p.size() != 2)
          throw ContractError("config: enabled_pairs entries must be [a, b] pairs");
        c.enabled_pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    throw ContractError(std::string("config: bad field type: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ContractError("config: cannot write " + path);
  out << to_json_string(2) << "\n";
}

std::string RunConfig::hash_hex() const {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (unsigned char ch : to_json_string()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void RunConfig::validate() const {
  auto pos = [](int v, const char* name) {
    if (v <= 0) throw ContractError(std::string("config: ") + name + " must be positive");
  };
  pos(d_embed, "d_embed");
  pos(d_question, "d_question");
  pos(d_caption, "d_caption");
  pos(d_hist, "d_hist");
  pos(d_answer, "d_answer");
  pos(d_image, "d_image");
  pos(d_round, "d_round");
  pos(n_question, "n_question");
  pos(n_caption, "n_caption");
  pos(n_answer_words, "n_answer_words");
  pos(n_hist, "n_hist");
  pos(history_rounds, "history_rounds");
  pos(n_regions, "n_regions");
  pos(batch_size, "batch_size");
  pos(vocab_size, "vocab_size");
  if (n_candidates < 2) throw ContractError("config: n_candidates must be >= 2");
  if (epochs < 0) throw ContractError("config: epochs must be >= 0");
  if (lr <= 0) throw ContractError("config: lr must be positive");
  for (double r : {dropout_image, dropout_fusion, dropout_local})
    if (r < 0 || r >= 1) throw ContractError("config: dropout rates must be in [0, 1)");
  if (mode != "answer" && mode != "question")
    throw ContractError("config: mode must be \"answer\" or \"question\"");
}

}  // namespace fga
