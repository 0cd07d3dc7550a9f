#include "fga/vocab.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fga {

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  token_of_.push_back("<pad>");
  token_of_.push_back("<unk>");
  for (auto& tok : tokens) {
    if (tok == "<pad>" || tok == "<unk>") continue;
    token_of_.push_back(tok);
  }
  for (int i = 0; i < static_cast<int>(token_of_.size()); ++i) id_of_[token_of_[i]] = i;
  unk_id_ = id_of_.at("<unk>");
}

int Vocabulary::id(const std::string& token) const {
  auto it = id_of_.find(token);
  return it == id_of_.end() ? unk_id_ : it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (auto& t : tokens) ids.push_back(id(t));
  return ids;
}

void Vocabulary::save(const std::string& path) const {
  nlohmann::json j = nlohmann::json::object();
  for (int i = 0; i < size(); ++i) j[token_of_[i]] = i;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("vocab: cannot write " + path);
  out << j.dump(2) << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("vocab: cannot read " + path);
  nlohmann::json j;
  in >> j;
  Vocabulary v;
  int n = static_cast<int>(j.size());
  v.token_of_.assign(n, "");
  for (auto& [tok, idj] : j.items()) {
    int id = idj.get<int>();
    if (id < 0 || id >= n) throw std::runtime_error("vocab: ids not dense in " + path);
    v.token_of_[id] = tok;
    v.id_of_[tok] = id;
  }
  if (v.token_of_.empty() || v.token_of_[0] != "<pad>")
    throw std::runtime_error("vocab: <pad> must map to 0");
  if (!v.id_of_.count("<unk>")) throw std::runtime_error("vocab: <unk> missing");
  v.unk_id_ = v.id_of_.at("<unk>");
  return v;
}

}  // namespace fga
