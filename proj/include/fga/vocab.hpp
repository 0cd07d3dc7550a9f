#ifndef FGA_VOCAB_HPP
#define FGA_VOCAB_HPP

#include <map>
#include <string>
#include <vector>

namespace fga {

// Closed vocabulary: "<pad>" is id 0, "<unk>" must be present. Unknown
// tokens are mapped to "<unk>" at ingestion time.
class Vocabulary {
 public:
  static constexpr int kPad = 0;

  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);  // tokens after pad/unk

  int id(const std::string& token) const;   // unknown -> unk id
  int unk_id() const { return unk_id_; }
  int size() const { return static_cast<int>(token_of_.size()); }
  const std::string& token(int id) const { return token_of_.at(id); }
  bool contains(const std::string& token) const { return id_of_.count(token) != 0; }

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  std::vector<int> encode(const std::vector<std::string>& tokens) const;

 private:
  std::map<std::string, int> id_of_;
  std::vector<std::string> token_of_;
  int unk_id_ = 1;
};

}  // namespace fga

#endif  // FGA_VOCAB_HPP
