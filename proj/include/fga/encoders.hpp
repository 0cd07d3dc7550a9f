#ifndef FGA_ENCODERS_HPP
#define FGA_ENCODERS_HPP

#include "fga/autodiff.hpp"
#include "fga/vocab.hpp"

namespace fga {

struct TokenSequence {
  std::vector<int> ids;
  int true_length = 0;

  static TokenSequence from_ids(std::vector<int> ids) {
    TokenSequence s;
    s.true_length = static_cast<int>(ids.size());
    s.ids = std::move(ids);
    return s;
  }
};

// Pads with id 0 or keeps the first n tokens.
TokenSequence pad_or_truncate(const TokenSequence& seq, int n);

// Columns are embedding rows of the ids; PAD columns are row 0 of E.
Tape::Var embed_tokens(Tape& t, const TokenSequence& seq, Parameter& E);

// One LSTM: four gates, each with input map W (d_h x d_in), recurrent map
// U (d_h x d_h) and bias b. Forget bias is initialized to 1.
struct LstmParams {
  Parameter *Wi, *Ui, *bi;
  Parameter *Wf, *Uf, *bf;
  Parameter *Wo, *Uo, *bo;
  Parameter *Wg, *Ug, *bg;
  int d_in = 0, d_h = 0;
};

LstmParams make_lstm(ParamRegistry& reg, const std::string& prefix, int d_in, int d_h);
void init_lstm(LstmParams& p, std::mt19937_64& rng);

// Standard recurrence from zero state; output column t is h_t. The state
// carries through padded positions.
Tape::Var lstm_encode(Tape& t, Tape::Var x, const LstmParams& p);

// Entity u is the hidden state at the final (padded) position of answer u.
Tape::Var encode_answer_bank(Tape& t, const std::vector<TokenSequence>& answers,
                             Parameter& E, const LstmParams& p);

// Per-region 1x1 linear map + ReLU + dropout. regions is n_I x d_I; the
// returned utility matrix is d_I x n_I.
Tape::Var encode_image(Tape& t, const Mat& regions, Parameter& W, Parameter& b,
                       double dropout_rate, bool train, std::mt19937_64& rng);

}  // namespace fga

#endif  // FGA_ENCODERS_HPP
