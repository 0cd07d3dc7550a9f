#include "fga/batchnorm.hpp"

#include <cmath>

namespace fga {

std::vector<Tape::Var> batchnorm_joint(Tape& t, const std::vector<Tape::Var>& xs,
                                       BatchNormState& st, bool train) {
  if (!st.gamma || !st.beta) throw ContractError("batchnorm: unbound gamma/beta");
  if (xs.empty()) throw ContractError("batchnorm: empty pool");
  Tape::Var gamma = t.param(*st.gamma);
  Tape::Var beta = t.param(*st.beta);

  std::vector<Tape::Var> out;
  out.reserve(xs.size());

  if (train) {
    long n = 0;
    for (Tape::Var x : xs) n += t.val(x).size();
    if (n < 2) throw ContractError("batchnorm: train-mode pool needs at least 2 elements");
    const double inv_n = 1.0 / static_cast<double>(n);

    Tape::Var total = t.sum(xs[0]);
    for (std::size_t k = 1; k < xs.size(); ++k) total = t.add(total, t.sum(xs[k]));
    Tape::Var mean = t.scale(total, inv_n);
    Tape::Var neg_mean = t.scale(mean, -1.0);

    std::vector<Tape::Var> centered;
    centered.reserve(xs.size());
    Tape::Var sq_total = -1;
    for (Tape::Var x : xs) {
      Tape::Var c = t.add_scalar(x, neg_mean);
      centered.push_back(c);
      Tape::Var s = t.sum(t.mul(c, c));
      sq_total = sq_total < 0 ? s : t.add(sq_total, s);
    }
    Tape::Var var = t.scale(sq_total, inv_n);
    Tape::Var inv_std = t.reciprocal(t.sqrt(t.add_const(var, st.eps)));

    for (Tape::Var c : centered)
      out.push_back(t.add_scalar(t.mul_scalar(t.mul_scalar(c, inv_std), gamma), beta));

    const double m = st.momentum;
    st.running_mean = (1.0 - m) * st.running_mean + m * t.val(mean)(0, 0);
    st.running_var = (1.0 - m) * st.running_var + m * t.val(var)(0, 0);
    st.initialized = true;
  } else {
    if (!st.initialized)
      throw ContractError("batchnorm: eval before any train update or checkpoint load");
    const double inv_std = 1.0 / std::sqrt(st.running_var + st.eps);
    for (Tape::Var x : xs) {
      Tape::Var xhat = t.scale(t.add_const(x, -st.running_mean), inv_std);
      out.push_back(t.add_scalar(t.mul_scalar(xhat, gamma), beta));
    }
  }
  return out;
}

Tape::Var batchnorm_scalar(Tape& t, Tape::Var x, BatchNormState& st, bool train) {
  return batchnorm_joint(t, {x}, st, train)[0];
}

}  // namespace fga
