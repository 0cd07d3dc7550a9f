#include "fga/model.hpp"

#include "fga/init.hpp"

#include <algorithm>
#include <cmath>

namespace fga {

namespace {

Mat one_hot_last(int n) {
  Mat p = Mat::Zero(n, 1);
  p(n - 1, 0) = 1.0;
  return p;
}

}  // namespace

Model::Model(RunConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();

  E_ = &reg_.add("emb.E", cfg_.vocab_size, cfg_.d_embed);
  lstm_q_ = make_lstm(reg_, "lstm.q", cfg_.d_embed, cfg_.d_question);
  lstm_c_ = make_lstm(reg_, "lstm.c", cfg_.d_embed, cfg_.d_caption);
  lstm_hq_ = make_lstm(reg_, "lstm.hq", cfg_.d_embed, cfg_.d_hist);
  lstm_ha_ = make_lstm(reg_, "lstm.ha", cfg_.d_embed, cfg_.d_hist);
  lstm_a_ = make_lstm(reg_, "lstm.a", cfg_.d_embed, cfg_.d_answer);
  img_W_ = &reg_.add("img.W", cfg_.d_image, cfg_.d_image);
  img_b_ = &reg_.add("img.b", cfg_.d_image, 1);

  std::vector<UtilityDef> defs;
  defs.push_back({"image", "image", cfg_.d_image, cfg_.n_regions, Mat()});
  defs.push_back({"question", "question", cfg_.d_question, cfg_.n_question,
                  one_hot_last(cfg_.n_question)});
  defs.push_back({"caption", "caption", cfg_.d_caption, cfg_.n_caption,
                  one_hot_last(cfg_.n_caption)});
  defs.push_back({"answers", "answers", cfg_.d_answer, cfg_.n_candidates, Mat()});
  for (int r = 0; r < cfg_.history_rounds; ++r) {
    defs.push_back({"hist_q." + std::to_string(r), "hist_q", cfg_.d_hist, cfg_.n_hist, Mat()});
    defs.push_back({"hist_a." + std::to_string(r), "hist_a", cfg_.d_hist, cfg_.n_hist, Mat()});
  }

  std::vector<std::pair<int, int>> pairs;
  const std::vector<std::pair<int, int>>* pair_ptr = nullptr;
  if (!cfg_.enabled_pairs.empty()) {
    auto index_of = [&](const std::string& name) {
      for (int i = 0; i < static_cast<int>(defs.size()); ++i)
        if (defs[i].name == name) return i;
      throw ContractError("config: unknown utility in enabled_pairs: " + name);
    };
    for (const auto& [a, b] : cfg_.enabled_pairs) pairs.emplace_back(index_of(a), index_of(b));
    pair_ptr = &pairs;
  }
  fg_ = std::make_unique<FactorGraph>(reg_, std::move(defs), cfg_.self_factors, pair_ptr);

  fused_len_ = cfg_.d_image + cfg_.d_question + cfg_.d_caption + cfg_.d_answer +
               cfg_.history_rounds * cfg_.d_round;
  const int in = fused_len_ + cfg_.d_answer;
  const int h1 = in / 2, h2 = in / 4;
  fh_W_ = &reg_.add("fus.hist.W", cfg_.d_round, 2 * cfg_.d_hist);
  fh_b_ = &reg_.add("fus.hist.b", cfg_.d_round, 1);
  l1_W_ = &reg_.add("fus.l1.W", h1, in);
  l1_b_ = &reg_.add("fus.l1.b", h1, 1);
  l2_W_ = &reg_.add("fus.l2.W", h2, h1);
  l2_b_ = &reg_.add("fus.l2.b", h2, 1);
  out_W_ = &reg_.add("fus.out.W", 1, h2);
  fus_bn1_.gamma = &reg_.add("fus.bn1.gamma", 1, 1);
  fus_bn1_.beta = &reg_.add("fus.bn1.beta", 1, 1);
  fus_bn2_.gamma = &reg_.add("fus.bn2.gamma", 1, 1);
  fus_bn2_.beta = &reg_.add("fus.bn2.beta", 1, 1);
}

void Model::init_params(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  kaiming_normal(E_->value, cfg_.d_embed, rng);
  for (LstmParams* p : {&lstm_q_, &lstm_c_, &lstm_hq_, &lstm_ha_, &lstm_a_}) init_lstm(*p, rng);
  kaiming_normal(img_W_->value, cfg_.d_image, rng);
  img_b_->value.setZero();
  fg_->init_params(rng);
  kaiming_normal(fh_W_->value, 2 * cfg_.d_hist, rng);
  fh_b_->value.setZero();
  kaiming_normal(l1_W_->value, static_cast<int>(l1_W_->value.cols()), rng);
  l1_b_->value.setZero();
  kaiming_normal(l2_W_->value, static_cast<int>(l2_W_->value.cols()), rng);
  l2_b_->value.setZero();
  kaiming_normal(out_W_->value, static_cast<int>(out_W_->value.cols()), rng);
  for (BatchNormState* st : {&fus_bn1_, &fus_bn2_}) {
    st->gamma->value(0, 0) = 1.0;
    st->beta->value(0, 0) = 0.0;
    st->running_mean = 0.0;
    st->running_var = 1.0;
    st->initialized = false;
  }
  // a fresh model must be evaluable (untrained baselines); default stats
  // mean 0 / var 1 make eval-mode batch norm a near-identity affine map
  mark_bn_initialized();
}

void Model::mark_bn_initialized() {
  for (auto& [_, st] : fg_->bn_states()) st.initialized = true;
  fus_bn1_.initialized = true;
  fus_bn2_.initialized = true;
}

std::map<std::string, BatchNormState*> Model::bn_all() {
  std::map<std::string, BatchNormState*> out;
  for (auto& [key, st] : fg_->bn_states()) out.emplace(key, &st);
  out.emplace("fus.bn1", &fus_bn1_);
  out.emplace("fus.bn2", &fus_bn2_);
  return out;
}

int Model::utility_index(const std::string& name) const {
  const auto& defs = fg_->defs();
  for (int i = 0; i < static_cast<int>(defs.size()); ++i)
    if (defs[i].name == name) return i;
  throw ContractError("model: unknown utility: " + name);
}

void Model::prune_pair(const std::string& target, const std::string& source) {
  fg_->prune(utility_index(target), utility_index(source));
}

std::vector<std::pair<std::string, std::string>> Model::pruned_pairs() const {
  std::vector<std::pair<std::string, std::string>> out;
  const auto& defs = fg_->defs();
  for (auto [i, j] : fg_->pruned()) out.emplace_back(defs[i].name, defs[j].name);
  return out;
}

void Model::validate_record(const DialogRecord& rec) const {
  auto fail = [&](const std::string& field, const std::string& why) {
    throw ContractError("record " + rec.record_id + ": " + field + ": " + why);
  };
  if (rec.features.rows() != cfg_.n_regions || rec.features.cols() != cfg_.d_image)
    fail("image", "expected " + std::to_string(cfg_.n_regions) + " x " +
                      std::to_string(cfg_.d_image) + " features");
  if (static_cast<int>(rec.candidates.size()) != cfg_.n_candidates)
    fail("candidates", "expected " + std::to_string(cfg_.n_candidates) + " entries, got " +
                           std::to_string(rec.candidates.size()));
  if (rec.gt_index < 0 || rec.gt_index >= cfg_.n_candidates)
    fail("gt_index", "out of range");
  if (static_cast<int>(rec.history.size()) > cfg_.history_rounds)
    fail("history", "more rounds than T=" + std::to_string(cfg_.history_rounds));
  if (!rec.dense_relevance.empty() &&
      static_cast<int>(rec.dense_relevance.size()) != cfg_.n_candidates)
    fail("dense_relevance", "length must equal candidate count");
}

TokenSequence Model::query_tokens(const DialogRecord& rec) const {
  if (cfg_.mode == "answer") return pad_or_truncate(rec.question, cfg_.n_question);
  // question-selection mode: the query is the previous interaction (Q+A)
  TokenSequence q;
  if (!rec.history.empty()) {
    const auto& [hq, ha] = rec.history.back();
    q.ids.assign(hq.ids.begin(), hq.ids.begin() + hq.true_length);
    q.ids.insert(q.ids.end(), ha.ids.begin(), ha.ids.begin() + ha.true_length);
    q.true_length = static_cast<int>(q.ids.size());
  }
  return pad_or_truncate(q, cfg_.n_question);
}

std::vector<Tape::Var> Model::encode_record(Tape& t, const DialogRecord& rec, bool train,
                                            std::mt19937_64& rng) {
  std::vector<Tape::Var> U;
  U.reserve(fg_->defs().size());
  U.push_back(encode_image(t, rec.features, *img_W_, *img_b_, cfg_.dropout_image, train, rng));
  U.push_back(lstm_encode(t, embed_tokens(t, query_tokens(rec), *E_), lstm_q_));
  U.push_back(
      lstm_encode(t, embed_tokens(t, pad_or_truncate(rec.caption, cfg_.n_caption), *E_), lstm_c_));
  std::vector<TokenSequence> cands;
  cands.reserve(rec.candidates.size());
  for (const auto& c : rec.candidates) cands.push_back(pad_or_truncate(c, cfg_.n_answer_words));
  U.push_back(encode_answer_bank(t, cands, *E_, lstm_a_));
  for (int r = 0; r < cfg_.history_rounds; ++r) {
    if (r < static_cast<int>(rec.history.size())) {
      const auto& [hq, ha] = rec.history[r];
      U.push_back(lstm_encode(t, embed_tokens(t, pad_or_truncate(hq, cfg_.n_hist), *E_), lstm_hq_));
      U.push_back(lstm_encode(t, embed_tokens(t, pad_or_truncate(ha, cfg_.n_hist), *E_), lstm_ha_));
    } else {
      // absent rounds contribute zero utilities (and zero attended vectors)
      U.push_back(t.constant(Mat::Zero(cfg_.d_hist, cfg_.n_hist)));
      U.push_back(t.constant(Mat::Zero(cfg_.d_hist, cfg_.n_hist)));
    }
  }
  return U;
}

std::pair<std::vector<ModelOutput>, Tape::Var> Model::forward_batch(
    Tape& t, const std::vector<DialogRecord>& records, bool train, std::mt19937_64& rng) {
  const int B = static_cast<int>(records.size());
  if (B == 0) throw ContractError("forward: empty batch");
  for (const auto& rec : records) validate_record(rec);

  std::vector<std::vector<Tape::Var>> utilities;
  utilities.reserve(B);
  for (const auto& rec : records) utilities.push_back(encode_record(t, rec, train, rng));

  std::vector<AttentionResult> att =
      fg_->run_batch(t, utilities, train, rng, cfg_.dropout_local);

  const int i_img = 0, i_q = 1, i_c = 2, i_a = 3;
  Tape::Var fhW = t.param(*fh_W_), fhb = t.param(*fh_b_);
  Tape::Var l1W = t.param(*l1_W_), l1b = t.param(*l1_b_);
  Tape::Var l2W = t.param(*l2_W_), l2b = t.param(*l2_b_);
  Tape::Var outW = t.param(*out_W_);

  // layer-1 activations per record, pooled batch norm across the batch
  std::vector<Tape::Var> z1;
  z1.reserve(B);
  for (int r = 0; r < B; ++r) {
    std::vector<Tape::Var> parts = {att[r].attended[i_img], att[r].attended[i_q],
                                    att[r].attended[i_c], att[r].attended[i_a]};
    for (int h = 0; h < cfg_.history_rounds; ++h) {
      Tape::Var pair_vec =
          t.vstack({att[r].attended[4 + 2 * h], att[r].attended[5 + 2 * h]});
      parts.push_back(linear(t, pair_vec, fhW, fhb));
    }
    Tape::Var a = t.vstack(parts);  // L x 1
    std::vector<Tape::Var> cand_cols;
    cand_cols.reserve(cfg_.n_candidates);
    for (int u = 0; u < cfg_.n_candidates; ++u)
      cand_cols.push_back(t.vstack({a, t.col(utilities[r][i_a], u)}));
    z1.push_back(linear(t, t.hstack(cand_cols), l1W, l1b));
  }
  std::vector<Tape::Var> n1 = batchnorm_joint(t, z1, fus_bn1_, train);

  std::vector<Tape::Var> z2;
  z2.reserve(B);
  for (int r = 0; r < B; ++r) z2.push_back(linear(t, t.relu(n1[r]), l2W, l2b));
  std::vector<Tape::Var> n2 = batchnorm_joint(t, z2, fus_bn2_, train);

  std::vector<ModelOutput> outs(B);
  Tape::Var total = t.constant(Mat::Zero(1, 1));
  for (int r = 0; r < B; ++r) {
    Tape::Var h = t.dropout(t.relu(n2[r]), cfg_.dropout_fusion, train, rng);
    Tape::Var probs = t.softmax(t.transpose(t.matmul(outW, h)));
    Tape::Var picked = t.col(t.transpose(probs), records[r].gt_index);
    Tape::Var nll = t.scale(t.log(picked), -1.0);
    total = t.add(total, nll);

    ModelOutput& o = outs[r];
    o.probs = t.val(probs);
    o.loss = t.val(nll)(0, 0);
    const int m = static_cast<int>(fg_->defs().size());
    o.beliefs.reserve(m);
    for (int i = 0; i < m; ++i) o.beliefs.push_back(t.val(att[r].belief[i]));
    o.prior_term = att[r].prior_term;
    o.local_term = att[r].local_term;
    o.message_term = att[r].message_term;
  }
  Tape::Var mean_loss = t.scale(total, 1.0 / B);
  return {std::move(outs), mean_loss};
}

ModelOutput Model::forward(const DialogRecord& record) {
  Tape t;
  std::mt19937_64 rng(0);  // unused in eval mode
  return std::move(forward_batch(t, {record}, false, rng).first[0]);
}

double nll_loss(const Mat& probs, int gt_index) {
  if (probs.cols() != 1 || probs.rows() < 2) throw ContractError("nll_loss: probs must be n x 1");
  if (gt_index < 0 || gt_index >= probs.rows()) throw ContractError("nll_loss: gt out of range");
  return -std::log(probs(gt_index, 0));
}

}  // namespace fga
