#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fga/encoders.hpp"
#include "fga/grad_check.hpp"
#include "fga/init.hpp"

#include <cstdio>

using namespace fga;

TEST_CASE("pad_or_truncate") {
  auto s = TokenSequence::from_ids({5, 6, 7});
  auto p = pad_or_truncate(s, 5);
  CHECK(p.ids == std::vector<int>{5, 6, 7, 0, 0});
  CHECK(p.true_length == 3);

  std::vector<int> long_ids(25);
  for (int i = 0; i < 25; ++i) long_ids[i] = i + 1;
  auto tr = pad_or_truncate(TokenSequence::from_ids(long_ids), 20);
  CHECK(tr.ids.size() == 20);
  CHECK(tr.ids.back() == 20);
  CHECK(tr.true_length == 20);

  auto same = pad_or_truncate(p, 5);
  CHECK(same.ids == p.ids);
  CHECK(same.true_length == p.true_length);
}

TEST_CASE("embed_tokens: one-hot rows, PAD column, shared embedding") {
  ParamRegistry reg;
  Parameter& E = reg.add("E", 4, 4);
  E.value = Mat::Identity(4, 4);
  Tape t;
  auto u = embed_tokens(t, TokenSequence::from_ids({2, 1}), E);
  CHECK(t.val(u).col(0) == Mat::Identity(4, 4).col(2));
  CHECK(t.val(u).col(1) == Mat::Identity(4, 4).col(1));

  std::mt19937_64 rng(1);
  Parameter& E2 = reg.add("E2", 5, 3);
  fill_normal(E2.value, 1.0, rng);
  auto pads = embed_tokens(t, TokenSequence::from_ids({0, 0, 0}), E2);
  for (int j = 0; j < 3; ++j)
    CHECK((t.val(pads).col(j) - E2.value.row(0).transpose()).cwiseAbs().maxCoeff() == 0.0);

  // same token through the shared table gives the same vector regardless of context
  auto a = embed_tokens(t, TokenSequence::from_ids({3, 1}), E2);
  auto b = embed_tokens(t, TokenSequence::from_ids({2, 3}), E2);
  CHECK((t.val(a).col(0) - t.val(b).col(1)).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(embed_tokens(t, TokenSequence::from_ids({9}), E2), ContractError);
}

TEST_CASE("lstm_encode: zero dynamics, single-step hand cell, determinism") {
  ParamRegistry reg;
  auto p = make_lstm(reg, "lstm", 3, 2);
  Tape t;
  Mat x(3, 4);
  x.setRandom();
  auto h = lstm_encode(t, t.constant(x), p);
  CHECK(t.val(h).rows() == 2);
  CHECK(t.val(h).cols() == 4);
  CHECK(t.val(h).isZero(0.0));  // all-zero gates -> sigmoid(0)*tanh(0)=0 cell

  std::mt19937_64 rng(2);
  init_lstm(p, rng);
  Mat x1(3, 1);
  x1 << 0.3, -0.7, 1.1;
  Tape t2;
  auto h1 = lstm_encode(t2, t2.constant(x1), p);

  auto sig = [](const Eigen::VectorXd& v) {
    return Eigen::VectorXd((1.0 / (1.0 + (-v.array()).exp())));
  };
  Eigen::VectorXd i = sig(p.Wi->value * x1 + p.bi->value);
  Eigen::VectorXd f = sig(p.Wf->value * x1 + p.bf->value);
  Eigen::VectorXd o = sig(p.Wo->value * x1 + p.bo->value);
  Eigen::VectorXd g = (p.Wg->value * x1 + p.bg->value).array().tanh();
  Eigen::VectorXd c = i.cwiseProduct(g);
  Eigen::VectorXd expect = o.cwiseProduct(Eigen::VectorXd(c.array().tanh()));
  CHECK((t2.val(h1).col(0) - expect).cwiseAbs().maxCoeff() < 1e-12);

  Tape t3;
  auto h2 = lstm_encode(t3, t3.constant(x1), p);
  CHECK((t3.val(h2) - t2.val(h1)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lstm_encode gradient matches finite differences") {
  ParamRegistry reg;
  auto p = make_lstm(reg, "lstm", 2, 3);
  std::mt19937_64 rng(5);
  init_lstm(p, rng);
  Mat x(2, 3);
  fill_normal(x, 1.0, rng);
  Mat readout(3, 1);
  fill_normal(readout, 1.0, rng);
  auto f = [&](bool want) {
    Tape t;
    auto h = lstm_encode(t, t.constant(x), p);
    auto loss = t.sum(t.matmul(t.constant(readout.transpose()), t.tanh(t.row_sums(h))));
    if (want) t.backward(loss);
    return t.val(loss)(0, 0);
  };
  CHECK(grad_check(f, reg, 1e-5) < 1e-4);
}

TEST_CASE("encode_answer_bank: duplicates, shape, permutation") {
  ParamRegistry reg;
  Parameter& E = reg.add("E", 6, 3);
  auto p = make_lstm(reg, "lstm_a", 3, 4);
  std::mt19937_64 rng(7);
  fill_normal(E.value, 1.0, rng);
  init_lstm(p, rng);

  std::vector<TokenSequence> answers = {
      pad_or_truncate(TokenSequence::from_ids({2, 3}), 4),
      pad_or_truncate(TokenSequence::from_ids({4, 5, 1}), 4),
      pad_or_truncate(TokenSequence::from_ids({2, 3}), 4),
  };
  Tape t;
  auto bank = encode_answer_bank(t, answers, E, p);
  CHECK(t.val(bank).rows() == 4);
  CHECK(t.val(bank).cols() == 3);
  CHECK((t.val(bank).col(0) - t.val(bank).col(2)).cwiseAbs().maxCoeff() == 0.0);

  std::vector<TokenSequence> perm = {answers[1], answers[2], answers[0]};
  Tape t2;
  auto bank2 = encode_answer_bank(t2, perm, E, p);
  CHECK((t2.val(bank2).col(0) - t.val(bank).col(1)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t2.val(bank2).col(2) - t.val(bank).col(0)).cwiseAbs().maxCoeff() == 0.0);

  std::vector<TokenSequence> hundred(100, answers[0]);
  Tape t3;
  CHECK(t3.val(encode_answer_bank(t3, hundred, E, p)).cols() == 100);

  std::vector<TokenSequence> one = {answers[0]};
  Tape t4;
  CHECK_THROWS_AS(encode_answer_bank(t4, one, E, p), ContractError);
}

TEST_CASE("encode_image: identity, zero map, shape") {
  ParamRegistry reg;
  Parameter& W = reg.add("img.W", 4, 4);
  Parameter& b = reg.add("img.b", 4, 1);
  std::mt19937_64 rng(9);

  W.value = Mat::Identity(4, 4);
  Mat regions = Mat::Random(6, 4).cwiseAbs();  // nonneg features
  Tape t;
  auto u = encode_image(t, regions, W, b, 0.5, /*train=*/false, rng);
  CHECK((t.val(u) - regions.transpose()).cwiseAbs().maxCoeff() < 1e-15);

  W.value.setZero();
  Tape t2;
  CHECK(t2.val(encode_image(t2, regions, W, b, 0.5, false, rng)).isZero(0.0));

  ParamRegistry reg2;
  Parameter& W2 = reg2.add("img.W", 512, 512);
  Parameter& b2 = reg2.add("img.b", 512, 1);
  Mat big = Mat::Zero(49, 512);
  Tape t3;
  auto u3 = encode_image(t3, big, W2, b2, 0.5, false, rng);
  CHECK(t3.val(u3).rows() == 512);
  CHECK(t3.val(u3).cols() == 49);
}

TEST_CASE("vocabulary round trip and unk mapping") {
  Vocabulary v({"dog", "cat", "runs"});
  CHECK(v.id("<pad>") == 0);
  CHECK(v.id("dog") == 2);
  CHECK(v.id("zebra") == v.unk_id());
  CHECK(v.size() == 5);

  std::string path = "vocab_test_tmp.json";
  v.save(path);
  auto v2 = Vocabulary::load(path);
  CHECK(v2.size() == v.size());
  CHECK(v2.id("cat") == v.id("cat"));
  CHECK(v2.id("nope") == v2.unk_id());
  std::remove(path.c_str());
}
