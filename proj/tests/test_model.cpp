#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fga/grad_check.hpp"
#include "fga/init.hpp"
#include "fga/model.hpp"

#include "model_ref.hpp"

#include <random>

using namespace fga;
using model_ref::forward_ref;
using model_ref::toy_config;
using model_ref::toy_record;

namespace {

TokenSequence toks(std::initializer_list<int> ids) {
  return TokenSequence::from_ids(std::vector<int>(ids));
}

}  // namespace


TEST_CASE("config round-trips canonically with a stable hash") {
  RunConfig c = toy_config();
  c.vocab_size = 40;
  c.enabled_pairs = {{"image", "question"}, {"question", "answers"}};
  RunConfig back = RunConfig::from_json_string(c.to_json_string());
  CHECK(back.to_json_string() == c.to_json_string());
  CHECK(back.hash_hex() == c.hash_hex());
  CHECK(back.enabled_pairs == c.enabled_pairs);

  RunConfig other = c;
  other.lr = 2e-3;
  CHECK(other.hash_hex() != c.hash_hex());

  RunConfig bad = c;
  bad.mode = "essay";
  CHECK_THROWS_AS(RunConfig::from_json_string(bad.to_json_string()), ContractError);
  CHECK_THROWS_AS(RunConfig::from_json_string("{nope"), ContractError);
}

TEST_CASE("fusion layer widths follow the attended-length arithmetic") {
  {
    RunConfig c;  // reference defaults: L = 512+512+128+512+10*128 = 2944
    c.vocab_size = 50;
    Model m(c);
    const Mat& W1 = m.params().at("fus.l1.W").value;
    CHECK(W1.cols() == 2944 + 512);
    CHECK(W1.rows() == (2944 + 512) / 2);
    CHECK(m.params().at("fus.l2.W").value.rows() == (2944 + 512) / 4);
    CHECK(m.params().at("fus.out.W").value.rows() == 1);
    CHECK_FALSE(m.params().has("fus.out.b"));
    CHECK(m.params().at("fus.hist.W").value.rows() == 128);
    CHECK(m.params().at("fus.hist.W").value.cols() == 2 * 128);
  }
  {
    RunConfig c = toy_config();
    Model m(c);
    int L = c.d_image + c.d_question + c.d_caption + c.d_answer + c.history_rounds * c.d_round;
    CHECK(m.params().at("fus.l1.W").value.cols() == L + c.d_answer);
  }
}

TEST_CASE("registry holds exactly five LSTM encoders and one shared embedding") {
  RunConfig c = toy_config();
  Model m(c);
  std::set<std::string> prefixes;
  for (auto& [name, _] : m.params())
    if (name.rfind("lstm.", 0) == 0) prefixes.insert(name.substr(0, name.find('.', 5)));
  CHECK(prefixes == std::set<std::string>{"lstm.a", "lstm.c", "lstm.ha", "lstm.hq", "lstm.q"});
  CHECK(m.params().has("emb.E"));
  CHECK(m.params().at("emb.E").value.rows() == c.vocab_size);
}

TEST_CASE("probabilities form a simplex and eval is deterministic") {
  RunConfig c = toy_config();
  Model m(c);
  m.init_params(3);
  DialogRecord rec = toy_record(c, 11);
  ModelOutput a = m.forward(rec);
  ModelOutput b = m.forward(rec);
  CHECK(a.probs.rows() == c.n_candidates);
  CHECK(a.probs.minCoeff() > 0.0);
  CHECK(a.probs.sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK((a.probs - b.probs).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.loss == b.loss);
  // untrained symmetric-ish init keeps the distribution flat-ish
  WARN_LT(a.probs.maxCoeff() / a.probs.minCoeff(), 10.0);
}

TEST_CASE("identical candidates receive identical probabilities") {
  RunConfig c = toy_config();
  Model m(c);
  m.init_params(5);
  DialogRecord rec = toy_record(c, 21);
  rec.candidates[2] = rec.candidates[0];
  ModelOutput out = m.forward(rec);
  CHECK(out.probs(0, 0) == out.probs(2, 0));
}

TEST_CASE("zero output layer yields the uniform distribution") {
  RunConfig c = toy_config();
  Model m(c);
  m.init_params(5);
  m.params().at("fus.out.W").value.setZero();
  ModelOutput out = m.forward(toy_record(c, 22));
  for (int u = 0; u < c.n_candidates; ++u)
    CHECK(out.probs(u, 0) == doctest::Approx(1.0 / c.n_candidates).epsilon(1e-12));
}

TEST_CASE("candidate permutation permutes probabilities at a symmetric point") {
  RunConfig c = toy_config();
  Model m(c);
  m.init_params(9);  // neutral message matrices treat entities symmetrically
  DialogRecord rec = toy_record(c, 31);
  ModelOutput base = m.forward(rec);

  std::vector<int> perm = {2, 0, 3, 1};
  DialogRecord shuffled = rec;
  for (int u = 0; u < c.n_candidates; ++u) shuffled.candidates[u] = rec.candidates[perm[u]];
  shuffled.gt_index = 0;
  ModelOutput moved = m.forward(shuffled);
  for (int u = 0; u < c.n_candidates; ++u)
    CHECK(moved.probs(u, 0) == doctest::Approx(base.probs(perm[u], 0)).epsilon(1e-12));
}

TEST_CASE("forward matches an independent straight-line recompute") {
  RunConfig c = toy_config();
  Model m(c);
  m.init_params(17);
  // move to a generic point: every parameter and running stat non-trivial
  std::mt19937_64 rng(99);
  for (auto& [name, p] : m.params())
    if (name.rfind("fga.W.", 0) == 0 || name.rfind("fga.w.", 0) == 0) fill_normal(p->value, 0.7, rng);
  int k = 0;
  for (auto& [key, st] : m.bn_all()) {
    st->running_mean = 0.05 * (++k % 7) - 0.1;
    st->running_var = 0.8 + 0.1 * (k % 5);
    st->initialized = true;
  }
  for (std::uint64_t s : {41, 42, 43}) {
    DialogRecord rec = toy_record(c, s);
    if (s == 43) rec.history.clear();  // absent rounds become zero utilities
    ModelOutput out = m.forward(rec);
    Mat ref = forward_ref(m, rec);
    CHECK((out.probs - ref).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(out.loss == doctest::Approx(-std::log(ref(rec.gt_index, 0))).epsilon(1e-9));
  }
}

TEST_CASE("question mode with identical query content is bit-exact") {
  RunConfig ca = toy_config();
  RunConfig cq = ca;
  cq.mode = "question";
  Model ma(ca), mq(cq);
  ma.init_params(7);
  mq.init_params(7);

  DialogRecord rec = toy_record(ca, 51);
  const auto& [hq, ha] = rec.history.back();
  std::vector<int> merged(hq.ids.begin(), hq.ids.begin() + hq.true_length);
  merged.insert(merged.end(), ha.ids.begin(), ha.ids.begin() + ha.true_length);

  DialogRecord as_answer = rec;
  as_answer.question = TokenSequence::from_ids(merged);
  ModelOutput a = ma.forward(as_answer);
  ModelOutput q = mq.forward(rec);
  CHECK((a.probs - q.probs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("loss hand values and the gt contract") {
  Mat uniform = Mat::Constant(100, 1, 0.01);
  CHECK(nll_loss(uniform, 42) == doctest::Approx(std::log(100.0)).epsilon(1e-12));
  Mat certain = Mat::Zero(5, 1);
  certain(3, 0) = 1.0;
  CHECK(nll_loss(certain, 3) == 0.0);
  Mat half = Mat::Constant(2, 1, 0.5);
  CHECK(nll_loss(half, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(nll_loss(uniform, 100), ContractError);
  CHECK_THROWS_AS(nll_loss(uniform, -1), ContractError);

  RunConfig c = toy_config();
  Model m(c);
  m.init_params(3);
  DialogRecord rec = toy_record(c, 61);
  ModelOutput out = m.forward(rec);
  CHECK(out.loss == doctest::Approx(-std::log(out.probs(rec.gt_index, 0))).epsilon(1e-12));
}

TEST_CASE("record validation names the record and field") {
  RunConfig c = toy_config();
  Model m(c);
  m.init_params(3);
  DialogRecord rec = toy_record(c, 71);
  rec.candidates.pop_back();
  CHECK_THROWS_WITH_AS(m.forward(rec), doctest::Contains("candidates"), ContractError);
  rec = toy_record(c, 71);
  rec.gt_index = c.n_candidates;
  CHECK_THROWS_WITH_AS(m.forward(rec), doctest::Contains("gt_index"), ContractError);
  rec = toy_record(c, 71);
  rec.features = Mat::Zero(c.n_regions + 1, c.d_image);
  CHECK_THROWS_WITH_AS(m.forward(rec), doctest::Contains("toy-71"), ContractError);
}

TEST_CASE("end-to-end loss gradient passes the finite-difference check") {
  RunConfig c = toy_config();
  c.history_rounds = 1;
  c.n_candidates = 3;
  c.vocab_size = 8;
  Model m(c);
  m.init_params(13);
  // generic point: neutral message weights floor the numeric signal of
  // exactly-invariant shift directions
  std::mt19937_64 rng(5);
  for (auto& [name, p] : m.params())
    if (name.rfind("fga.W.", 0) == 0) fill_normal(p->value, 0.5, rng);

  std::vector<DialogRecord> batch = {toy_record(c, 81), toy_record(c, 82)};
  batch[1].history.clear();
  auto f = [&](bool want_grad) {
    Tape t;
    std::mt19937_64 fwd_rng(0);
    auto [outs, loss] = m.forward_batch(t, batch, true, fwd_rng);
    double v = t.val(loss)(0, 0);
    if (want_grad) t.backward(loss);
    return v;
  };
  CHECK(grad_check(f, m.params()) < 1e-4);
}
