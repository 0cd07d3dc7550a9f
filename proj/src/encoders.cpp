#include "fga/encoders.hpp"

#include "fga/init.hpp"

namespace fga {

TokenSequence pad_or_truncate(const TokenSequence& seq, int n) {
  if (n < 1) throw ContractError("pad_or_truncate: n must be >= 1");
  TokenSequence out;
  out.ids = seq.ids;
  out.ids.resize(n, Vocabulary::kPad);
  out.true_length = std::min(seq.true_length, n);
  return out;
}

Tape::Var embed_tokens(Tape& t, const TokenSequence& seq, Parameter& E) {
  for (int id : seq.ids)
    if (id < 0 || id >= E.value.rows()) throw ContractError("embed_tokens: id out of vocabulary");
  return t.transpose(t.rows_gather(t.param(E), seq.ids));
}

LstmParams make_lstm(ParamRegistry& reg, const std::string& prefix, int d_in, int d_h) {
  LstmParams p;
  p.d_in = d_in;
  p.d_h = d_h;
  auto gate = [&](const char* g, Parameter*& W, Parameter*& U, Parameter*& b) {
    W = &reg.add(prefix + ".W" + g, d_h, d_in);
    U = &reg.add(prefix + ".U" + g, d_h, d_h);
    b = &reg.add(prefix + ".b" + g, d_h, 1);
  };
  gate("i", p.Wi, p.Ui, p.bi);
  gate("f", p.Wf, p.Uf, p.bf);
  gate("o", p.Wo, p.Uo, p.bo);
  gate("g", p.Wg, p.Ug, p.bg);
  return p;
}

void init_lstm(LstmParams& p, std::mt19937_64& rng) {
  for (Parameter* W : {p.Wi, p.Wf, p.Wo, p.Wg}) kaiming_normal(W->value, p.d_in, rng);
  for (Parameter* U : {p.Ui, p.Uf, p.Uo, p.Ug}) kaiming_normal(U->value, p.d_h, rng);
  p.bf->value.setOnes();
}

Tape::Var lstm_encode(Tape& t, Tape::Var x, const LstmParams& p) {
  const int n = static_cast<int>(t.val(x).cols());
  if (t.val(x).rows() != p.d_in) throw ContractError("lstm_encode: input dim mismatch");
  Tape::Var Wi = t.param(*p.Wi), Ui = t.param(*p.Ui), bi = t.param(*p.bi);
  Tape::Var Wf = t.param(*p.Wf), Uf = t.param(*p.Uf), bf = t.param(*p.bf);
  Tape::Var Wo = t.param(*p.Wo), Uo = t.param(*p.Uo), bo = t.param(*p.bo);
  Tape::Var Wg = t.param(*p.Wg), Ug = t.param(*p.Ug), bg = t.param(*p.bg);

  Tape::Var h = t.constant(Mat::Zero(p.d_h, 1));
  Tape::Var c = t.constant(Mat::Zero(p.d_h, 1));
  std::vector<Tape::Var> hs;
  hs.reserve(n);
  for (int k = 0; k < n; ++k) {
    Tape::Var xk = t.col(x, k);
    Tape::Var i = t.sigmoid(t.add_colvec(t.add(t.matmul(Wi, xk), t.matmul(Ui, h)), bi));
    Tape::Var f = t.sigmoid(t.add_colvec(t.add(t.matmul(Wf, xk), t.matmul(Uf, h)), bf));
    Tape::Var o = t.sigmoid(t.add_colvec(t.add(t.matmul(Wo, xk), t.matmul(Uo, h)), bo));
    Tape::Var g = t.tanh(t.add_colvec(t.add(t.matmul(Wg, xk), t.matmul(Ug, h)), bg));
    c = t.add(t.mul(f, c), t.mul(i, g));
    h = t.mul(o, t.tanh(c));
    hs.push_back(h);
  }
  return t.hstack(hs);
}

Tape::Var encode_answer_bank(Tape& t, const std::vector<TokenSequence>& answers,
                             Parameter& E, const LstmParams& p) {
  if (answers.size() < 2) throw ContractError("encode_answer_bank: need at least 2 answers");
  std::vector<Tape::Var> cols;
  cols.reserve(answers.size());
  for (const auto& a : answers) {
    Tape::Var h = lstm_encode(t, embed_tokens(t, a, E), p);
    cols.push_back(t.col(h, static_cast<int>(t.val(h).cols()) - 1));
  }
  return t.hstack(cols);
}

Tape::Var encode_image(Tape& t, const Mat& regions, Parameter& W, Parameter& b,
                       double dropout_rate, bool train, std::mt19937_64& rng) {
  if (regions.cols() != W.value.cols()) throw ContractError("encode_image: feature dim mismatch");
  Tape::Var x = t.transpose(t.constant(regions));  // d_I x n_I
  Tape::Var y = t.relu(t.add_colvec(t.matmul(t.param(W), x), t.param(b)));
  return t.dropout(y, dropout_rate, train, rng);
}

}  // namespace fga
