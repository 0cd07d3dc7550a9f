#include "fga/attention.hpp"

#include "fga/init.hpp"

#include <algorithm>

namespace fga {

namespace {

std::pair<std::string, std::string> sorted_keys(const std::string& a, const std::string& b) {
  return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

FactorGraph::FactorGraph(ParamRegistry& reg, std::vector<UtilityDef> defs, bool self_factors,
                         const std::vector<std::pair<int, int>>* pairs)
    : reg_(&reg), defs_(std::move(defs)), self_factors_(self_factors) {
  const int m = static_cast<int>(defs_.size());
  if (m == 0) throw ContractError("factor graph: no utilities");

  std::map<std::string, int> key_dim;
  for (auto& u : defs_) {
    if (u.d <= 0 || u.n <= 0) throw ContractError("factor graph: bad utility dims: " + u.name);
    auto [it, fresh] = key_dim.emplace(u.key, u.d);
    if (!fresh && it->second != u.d)
      throw ContractError("factor graph: group members must share the embedding dim: " + u.key);
    if (u.prior.size() == 0) u.prior = Mat::Zero(u.n, 1);
    if (u.prior.rows() != u.n || u.prior.cols() != 1)
      throw ContractError("factor graph: prior length mismatch: " + u.name);
  }

  if (pairs) {
    for (auto [i, j] : *pairs) {
      if (i == j || i < 0 || j < 0 || i >= m || j >= m)
        throw ContractError("factor graph: bad pair index");
      enabled_.emplace(std::min(i, j), std::max(i, j));
    }
  } else {
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) enabled_.emplace(i, j);
  }

  // local factor parameters, shared per key
  for (auto& u : defs_) {
    if (v_.count(u.key)) continue;
    v_[u.key] = &reg.add("fga.u." + u.key + ".v", u.d, 1);
    V_[u.key] = &reg.add("fga.u." + u.key + ".V", u.d, u.d);
    if (self_factors_) {
      L_[u.key] = &reg.add("fga.u." + u.key + ".L", u.d, u.d);
      R_[u.key] = &reg.add("fga.u." + u.key + ".R", u.d, u.d);
    }
  }

  // joint factor embeddings, shared per sorted key pair
  for (auto [i, j] : enabled_) {
    auto kp = sorted_keys(defs_[i].key, defs_[j].key);
    if (pair_.count(kp)) continue;
    int da = key_dim.at(kp.first), db = key_dim.at(kp.second);
    int d = std::max(da, db);
    PairParams pp;
    pp.L = &reg.add("fga.p." + kp.first + "|" + kp.second + ".L", d, da);
    pp.R = &reg.add("fga.p." + kp.first + "|" + kp.second + ".R", d, db);
    pair_[kp] = pp;
  }

  // batch-norm per unordered factor
  auto add_bn = [&](const std::string& key) {
    BatchNormState st;
    st.gamma = &reg.add(key + ".gamma", 1, 1);
    st.beta = &reg.add(key + ".beta", 1, 1);
    bn_.emplace(key, st);
  };
  for (auto [i, j] : enabled_) add_bn("fga.bn." + defs_[i].name + "|" + defs_[j].name);
  if (self_factors_)
    for (auto& u : defs_) add_bn("fga.bn." + u.name + "|" + u.name);

  // per-utility and per-ordered-pair calibration weights
  for (auto& u : defs_) {
    w_prior_.push_back(&reg.add("fga.w." + u.name + ".prior", 1, 1));
    w_local_.push_back(&reg.add("fga.w." + u.name + ".local", 1, 1));
  }
  auto add_msg = [&](int tgt, int src) {
    const auto& ut = defs_[tgt];
    const auto& us = defs_[src];
    w_msg_[{tgt, src}] = &reg.add("fga.w." + ut.name + "|" + us.name, 1, 1);
    W_msg_[{tgt, src}] = &reg.add("fga.W." + ut.name + "|" + us.name, ut.n, us.n);
  };
  for (auto [i, j] : enabled_) {
    add_msg(i, j);
    add_msg(j, i);
  }
  if (self_factors_)
    for (int i = 0; i < m; ++i) add_msg(i, i);
}

void FactorGraph::init_params(std::mt19937_64& rng) {
  auto km = [&](std::map<std::string, Parameter*>& ps) {
    for (auto& [_, p] : ps) kaiming_normal(p->value, static_cast<int>(p->value.cols()), rng);
  };
  for (auto& [_, p] : v_) kaiming_normal(p->value, static_cast<int>(p->value.rows()), rng);
  km(V_);
  km(L_);
  km(R_);
  for (auto& [_, pp] : pair_) {
    kaiming_normal(pp.L->value, static_cast<int>(pp.L->value.cols()), rng);
    kaiming_normal(pp.R->value, static_cast<int>(pp.R->value.cols()), rng);
  }
  for (auto& [_, st] : bn_) {
    st.gamma->value(0, 0) = 1.0;
    st.beta->value(0, 0) = 0.0;
    st.running_mean = 0.0;
    st.running_var = 1.0;
    st.initialized = false;
  }
  for (auto* p : w_prior_) p->value(0, 0) = 1.0;
  for (auto* p : w_local_) p->value(0, 0) = 1.0;
  for (auto& [_, p] : w_msg_) p->value(0, 0) = 1.0;
  // neutral start: messages are mean interactions
  for (auto& [ts, p] : W_msg_) p->value.setConstant(1.0 / static_cast<double>(defs_[ts.second].n));
}

bool FactorGraph::pair_enabled(int i, int j) const {
  return enabled_.count({std::min(i, j), std::max(i, j)}) != 0;
}

Parameter& FactorGraph::message_weight(int target, int source) {
  auto it = w_msg_.find({target, source});
  if (it == w_msg_.end()) throw ContractError("factor graph: message pair not enabled");
  return *it->second;
}

std::vector<int> FactorGraph::message_sources(int target) const {
  std::vector<int> src;
  for (int j = 0; j < static_cast<int>(defs_.size()); ++j) {
    bool enabled = (j == target) ? self_factors_ : pair_enabled(target, j);
    if (enabled && !pruned_.count({target, j})) src.push_back(j);
  }
  return src;
}

void FactorGraph::prune(int target, int source) {
  auto it = w_msg_.find({target, source});
  if (it == w_msg_.end()) throw ContractError("factor graph: cannot prune a disabled pair");
  it->second->value.setZero();
  pruned_.emplace(target, source);
}

Tape::Var FactorGraph::local_info(Tape& t, int i, Tape::Var U, bool train, std::mt19937_64& rng,
                                  double dropout_rate) {
  const auto& key = defs_[i].key;
  Tape::Var h = t.matmul(t.param(*V_.at(key)), U);
  h = t.dropout(h, dropout_rate, train, rng);
  h = t.relu(h);
  return t.transpose(t.matmul(t.transpose(t.param(*v_.at(key))), h));  // n_i x 1
}

Tape::Var FactorGraph::raw_self_scores(Tape& t, int i, Tape::Var U) {
  const auto& key = defs_[i].key;
  Tape::Var left = t.l2_normalize_cols(t.matmul(t.param(*L_.at(key)), U));
  Tape::Var right = t.l2_normalize_cols(t.matmul(t.param(*R_.at(key)), U));
  return t.matmul(t.transpose(left), right);
}

Tape::Var FactorGraph::raw_joint_scores(Tape& t, int i, int j, Tape::Var Ui, Tape::Var Uj) {
  auto kp = sorted_keys(defs_[i].key, defs_[j].key);
  const PairParams& pp = pair_.at(kp);
  const bool i_is_left = defs_[i].key == kp.first;
  Tape::Var lhs = t.l2_normalize_cols(t.matmul(t.param(*pp.L), i_is_left ? Ui : Uj));
  Tape::Var rhs = t.l2_normalize_cols(t.matmul(t.param(*pp.R), i_is_left ? Uj : Ui));
  Tape::Var psi = t.matmul(t.transpose(lhs), rhs);
  return i_is_left ? psi : t.transpose(psi);
}

std::vector<AttentionResult> FactorGraph::run_batch(
    Tape& t, const std::vector<std::vector<Tape::Var>>& utilities, bool train,
    std::mt19937_64& rng, double local_dropout) {
  const int m = static_cast<int>(defs_.size());
  const int B = static_cast<int>(utilities.size());
  if (B == 0) throw ContractError("run_attention: empty batch");
  for (auto& rec : utilities) {
    if (static_cast<int>(rec.size()) != m)
      throw ContractError("run_attention: utility count mismatch");
    for (int i = 0; i < m; ++i)
      if (t.val(rec[i]).rows() != defs_[i].d || t.val(rec[i]).cols() != defs_[i].n)
        throw ContractError("run_attention: utility shape mismatch: " + defs_[i].name);
  }

  // local information terms, per record
  std::vector<std::vector<Tape::Var>> local(B, std::vector<Tape::Var>(m));
  for (int r = 0; r < B; ++r)
    for (int i = 0; i < m; ++i)
      local[r][i] = local_info(t, i, utilities[r][i], train, rng, local_dropout);

  // factor scores, batch-norm pooled per factor across the whole batch
  std::map<std::pair<int, int>, std::vector<Tape::Var>> scores;  // (i,j) i<=j -> per record
  auto normalize = [&](std::pair<int, int> fac, const std::string& bn_key,
                       std::vector<Tape::Var> raw) {
    scores[fac] = batchnorm_joint(t, raw, bn_.at(bn_key), train);
  };
  if (self_factors_) {
    for (int i = 0; i < m; ++i) {
      std::vector<Tape::Var> raw;
      raw.reserve(B);
      for (int r = 0; r < B; ++r) raw.push_back(raw_self_scores(t, i, utilities[r][i]));
      normalize({i, i}, "fga.bn." + defs_[i].name + "|" + defs_[i].name, std::move(raw));
    }
  }
  for (auto [i, j] : enabled_) {
    std::vector<Tape::Var> raw;
    raw.reserve(B);
    for (int r = 0; r < B; ++r)
      raw.push_back(raw_joint_scores(t, i, j, utilities[r][i], utilities[r][j]));
    normalize({i, j}, "fga.bn." + defs_[i].name + "|" + defs_[j].name, std::move(raw));
  }

  // messages, beliefs, attended vectors
  std::vector<AttentionResult> out(B);
  for (int r = 0; r < B; ++r) {
    AttentionResult& res = out[r];
    res.belief.resize(m);
    res.attended.resize(m);
    res.prior_term.resize(m);
    res.local_term.resize(m);
    res.message_term.resize(m);
    for (int i = 0; i < m; ++i) {
      Tape::Var prior = t.constant(defs_[i].prior);
      Tape::Var s = t.add(t.mul_scalar(prior, t.param(*w_prior_[i])),
                          t.mul_scalar(local[r][i], t.param(*w_local_[i])));
      for (int j : message_sources(i)) {
        Tape::Var psi;
        if (j == i) {
          psi = scores.at({i, i})[r];
        } else {
          auto fac = std::make_pair(std::min(i, j), std::max(i, j));
          psi = scores.at(fac)[r];
          if (j < i) psi = t.transpose(psi);  // stored as (min, max); we need (i, j)
        }
        Tape::Var mu = t.row_sums(t.mul(t.param(*W_msg_.at({i, j})), psi));
        s = t.add(s, t.mul_scalar(mu, t.param(*w_msg_.at({i, j}))));
        res.message_term[i][j] = t.val(mu);
      }
      res.belief[i] = t.softmax(s);
      res.attended[i] = t.matmul(utilities[r][i], res.belief[i]);
      res.prior_term[i] = defs_[i].prior;
      res.local_term[i] = t.val(local[r][i]);
    }
  }
  return out;
}

AttentionResult FactorGraph::run(Tape& t, const std::vector<Tape::Var>& utilities, bool train,
                                 std::mt19937_64& rng, double local_dropout) {
  return run_batch(t, {utilities}, train, rng, local_dropout)[0];
}

}  // namespace fga
