#include "fga/dataset.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fga {

namespace {

using nlohmann::json;

const char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string b64_encode(const unsigned char* data, std::size_t n) {
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  for (std::size_t i = 0; i < n; i += 3) {
    std::uint32_t v = data[i] << 16;
    if (i + 1 < n) v |= data[i + 1] << 8;
    if (i + 2 < n) v |= data[i + 2];
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(i + 1 < n ? kB64[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < n ? kB64[v & 63] : '=');
  }
  return out;
}

std::vector<unsigned char> b64_decode(const std::string& s) {
  auto val = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  if (s.size() % 4 != 0) throw ContractError("base64: length must be a multiple of 4");
  std::vector<unsigned char> out;
  out.reserve(s.size() / 4 * 3);
  for (std::size_t i = 0; i < s.size(); i += 4) {
    int pad = 0;
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) {
      char c = s[i + k];
      if (c == '=') {
        ++pad;
        v <<= 6;
      } else {
        int d = val(c);
        if (d < 0 || pad > 0) throw ContractError("base64: invalid character");
        v = (v << 6) | static_cast<std::uint32_t>(d);
      }
    }
    out.push_back((v >> 16) & 255);
    if (pad < 2) out.push_back((v >> 8) & 255);
    if (pad < 1) out.push_back(v & 255);
  }
  return out;
}

std::string features_to_b64(const Mat& m) {
  std::vector<float> buf(static_cast<std::size_t>(m.size()));
  std::size_t k = 0;
  for (int r = 0; r < m.rows(); ++r)  // row-major: regions are contiguous
    for (int c = 0; c < m.cols(); ++c) buf[k++] = static_cast<float>(m(r, c));
  return b64_encode(reinterpret_cast<const unsigned char*>(buf.data()),
                    buf.size() * sizeof(float));
}

Mat features_from_b64(const std::string& text, int rows, int cols) {
  std::vector<unsigned char> bytes = b64_decode(text);
  if (bytes.size() != static_cast<std::size_t>(rows) * cols * sizeof(float))
    throw ContractError("image: payload size does not match rows x cols");
  Mat m(rows, cols);
  const float* f = reinterpret_cast<const float*>(bytes.data());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = static_cast<double>(f[r * cols + c]);
  return m;
}

std::string dir_of(const std::string& path) {
  auto pos = path.find_last_of('/');
  return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

TokenSequence read_tokens(const json& arr, const Vocabulary& vocab, int n,
                          const std::string& where) {
  if (!arr.is_array()) throw ContractError(where + ": expected a token array");
  std::vector<std::string> toks;
  for (const auto& t : arr) {
    if (!t.is_string()) throw ContractError(where + ": tokens must be strings");
    toks.push_back(t.get<std::string>());
  }
  return pad_or_truncate(TokenSequence::from_ids(vocab.encode(toks)), n);
}

json write_tokens(const TokenSequence& seq, const Vocabulary& vocab) {
  json arr = json::array();
  for (int k = 0; k < seq.true_length; ++k) arr.push_back(vocab.token(seq.ids[k]));
  return arr;
}

struct SidecarIndex {
  std::uint32_t rows = 0, cols = 0;
  std::map<std::string, std::uint64_t> offset;  // into the f32 block area
  std::uint64_t blocks_start = 0;
};

SidecarIndex read_sidecar_index(std::ifstream& in, const std::string& path) {
  char magic[4];
  std::uint32_t count, rows, cols;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&count), 4);
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  if (!in || std::memcmp(magic, "FGAF", 4) != 0)
    throw ContractError("feature sidecar: bad header in " + path);
  SidecarIndex idx;
  idx.rows = rows;
  idx.cols = cols;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t len;
    in.read(reinterpret_cast<char*>(&len), 4);
    std::string id(len, '\0');
    in.read(id.data(), len);
    std::uint64_t off;
    in.read(reinterpret_cast<char*>(&off), 8);
    if (!in) throw ContractError("feature sidecar: truncated index in " + path);
    idx.offset[id] = off;
  }
  idx.blocks_start = static_cast<std::uint64_t>(in.tellg());
  return idx;
}

}  // namespace

void write_feature_sidecar(const std::string& path,
                           const std::vector<std::pair<std::string, Mat>>& features) {
  if (features.empty()) throw ContractError("feature sidecar: nothing to write");
  const std::uint32_t rows = static_cast<std::uint32_t>(features[0].second.rows());
  const std::uint32_t cols = static_cast<std::uint32_t>(features[0].second.cols());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContractError("feature sidecar: cannot write " + path);
  const std::uint32_t count = static_cast<std::uint32_t>(features.size());
  out.write("FGAF", 4);
  out.write(reinterpret_cast<const char*>(&count), 4);
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  std::uint64_t off = 0;
  for (const auto& [id, m] : features) {
    if (m.rows() != rows || m.cols() != cols)
      throw ContractError("feature sidecar: inconsistent shape for " + id);
    std::uint32_t len = static_cast<std::uint32_t>(id.size());
    out.write(reinterpret_cast<const char*>(&len), 4);
    out.write(id.data(), len);
    out.write(reinterpret_cast<const char*>(&off), 8);
    off += static_cast<std::uint64_t>(rows) * cols * sizeof(float);
  }
  for (const auto& [id, m] : features) {
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) {
        float f = static_cast<float>(m(r, c));
        out.write(reinterpret_cast<const char*>(&f), sizeof(float));
      }
  }
  if (!out) throw ContractError("feature sidecar: short write to " + path);
}

Mat read_sidecar_features(const std::string& path, const std::string& record_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractError("feature sidecar: cannot open " + path);
  SidecarIndex idx = read_sidecar_index(in, path);
  auto it = idx.offset.find(record_id);
  if (it == idx.offset.end())
    throw ContractError("feature sidecar: no features for " + record_id);
  in.seekg(static_cast<std::streamoff>(idx.blocks_start + it->second));
  Mat m(idx.rows, idx.cols);
  for (std::uint32_t r = 0; r < idx.rows; ++r)
    for (std::uint32_t c = 0; c < idx.cols; ++c) {
      float f;
      in.read(reinterpret_cast<char*>(&f), sizeof(float));
      m(r, c) = static_cast<double>(f);
    }
  if (!in) throw ContractError("feature sidecar: truncated block for " + record_id);
  return m;
}

std::vector<DialogRecord> load_dataset(const std::string& path, const Vocabulary& vocab,
                                       const RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ContractError("dataset: cannot open " + path);
  std::vector<DialogRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ContractError("dataset: line " + std::to_string(line_no) + ": invalid JSON: " +
                          e.what());
    }
    DialogRecord rec;
    rec.record_id = j.value("record_id", "");
    if (rec.record_id.empty())
      throw ContractError("dataset: line " + std::to_string(line_no) + ": missing record_id");
    auto fail = [&](const std::string& field, const std::string& why) -> ContractError {
      return ContractError("record " + rec.record_id + ": " + field + ": " + why);
    };
    try {
      if (!j.contains("image")) throw fail("image", "missing");
      const json& img = j.at("image");
      if (img.contains("inline")) {
        rec.features = features_from_b64(img.at("inline").get<std::string>(),
                                         img.at("rows").get<int>(), img.at("cols").get<int>());
      } else if (img.contains("sidecar")) {
        rec.features = read_sidecar_features(
            dir_of(path) + "/" + img.at("sidecar").get<std::string>(), rec.record_id);
      } else {
        throw fail("image", "needs either inline payload or sidecar reference");
      }
      if (rec.features.rows() != cfg.n_regions || rec.features.cols() != cfg.d_image)
        throw fail("image", "expected " + std::to_string(cfg.n_regions) + " x " +
                                std::to_string(cfg.d_image) + " features");

      rec.caption = read_tokens(j.at("caption"), vocab, cfg.n_caption, "caption");
      rec.question = read_tokens(j.at("question"), vocab, cfg.n_question, "question");
      if (!j.contains("history") || !j.at("history").is_array()) throw fail("history", "missing");
      for (const auto& round : j.at("history")) {
        if (!round.is_array() || round.size() != 2)
          throw fail("history", "each round is a [question, answer] pair");
        rec.history.push_back({read_tokens(round[0], vocab, cfg.n_hist, "history"),
                               read_tokens(round[1], vocab, cfg.n_hist, "history")});
      }
      if (static_cast<int>(rec.history.size()) > cfg.history_rounds)
        throw fail("history", "more rounds than T=" + std::to_string(cfg.history_rounds));

      if (!j.contains("candidates")) throw fail("candidates", "missing");
      for (const auto& cand : j.at("candidates"))
        rec.candidates.push_back(read_tokens(cand, vocab, cfg.n_answer_words, "candidates"));
      if (static_cast<int>(rec.candidates.size()) != cfg.n_candidates)
        throw fail("candidates", "expected " + std::to_string(cfg.n_candidates) +
                                     " entries, got " + std::to_string(rec.candidates.size()));

      rec.gt_index = j.value("gt_index", -1);
      if (rec.gt_index < 0 || rec.gt_index >= cfg.n_candidates)
        throw fail("gt_index", "out of range");

      if (j.contains("dense_relevance")) {
        for (const auto& v : j.at("dense_relevance"))
          rec.dense_relevance.push_back(v.get<double>());
        if (static_cast<int>(rec.dense_relevance.size()) != cfg.n_candidates)
          throw fail("dense_relevance", "length must equal candidate count");
      }
    } catch (const json::exception& e) {
      throw ContractError("record " + rec.record_id + ": malformed field: " + e.what());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void save_dataset(const std::string& path, const std::vector<DialogRecord>& records,
                  const Vocabulary& vocab, const RunConfig& cfg) {
  (void)cfg;
  std::ofstream out(path);
  if (!out) throw ContractError("dataset: cannot write " + path);
  for (const auto& rec : records) {
    json hist = json::array();
    for (const auto& [q, a] : rec.history)
      hist.push_back({write_tokens(q, vocab), write_tokens(a, vocab)});
    json cands = json::array();
    for (const auto& c : rec.candidates) cands.push_back(write_tokens(c, vocab));
    json j{{"record_id", rec.record_id},
           {"image",
            {{"inline", features_to_b64(rec.features)},
             {"rows", rec.features.rows()},
             {"cols", rec.features.cols()}}},
           {"caption", write_tokens(rec.caption, vocab)},
           {"question", write_tokens(rec.question, vocab)},
           {"history", hist},
           {"candidates", cands},
           {"gt_index", rec.gt_index}};
    if (!rec.dense_relevance.empty()) j["dense_relevance"] = rec.dense_relevance;
    out << j.dump() << "\n";
  }
  if (!out) throw ContractError("dataset: short write to " + path);
}

}  // namespace fga
