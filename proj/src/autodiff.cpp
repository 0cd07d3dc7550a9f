#include "fga/autodiff.hpp"

#include <cmath>

namespace fga {

namespace {

void require_finite(const Mat& m, const char* op) {
  if (!m.allFinite()) throw NumericError(std::string(op) + ": non-finite result");
}

}  // namespace

Tape::Var Tape::push(Mat value, std::function<void(Tape&, const Node&)> back) {
  Node n;
  n.value = std::move(value);
  n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

Tape::Var Tape::constant(Mat v) {
  require_finite(v, "constant");
  return push(std::move(v), nullptr);
}

Tape::Var Tape::param(Parameter& p) {
  require_finite(p.value, "param");
  Parameter* ptr = &p;
  return push(p.value, [ptr](Tape&, const Node& n) { ptr->grad += n.grad; });
}

Tape::Var Tape::matmul(Var a, Var b) {
  const Mat& A = val(a);
  const Mat& B = val(b);
  if (A.cols() != B.rows()) throw ContractError("matmul: inner dimensions differ");
  Mat y = A * B;
  require_finite(y, "matmul");
  return push(std::move(y), [a, b](Tape& t, const Node& n) {
    t.g(a) += n.grad * t.val(b).transpose();
    t.g(b) += t.val(a).transpose() * n.grad;
  });
}

Tape::Var Tape::add(Var a, Var b) {
  if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols())
    throw ContractError("add: shape mismatch");
  Mat y = val(a) + val(b);
  require_finite(y, "add");
  return push(std::move(y), [a, b](Tape& t, const Node& n) {
    t.g(a) += n.grad;
    t.g(b) += n.grad;
  });
}

Tape::Var Tape::sub(Var a, Var b) {
  if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols())
    throw ContractError("sub: shape mismatch");
  Mat y = val(a) - val(b);
  require_finite(y, "sub");
  return push(std::move(y), [a, b](Tape& t, const Node& n) {
    t.g(a) += n.grad;
    t.g(b) -= n.grad;
  });
}

Tape::Var Tape::mul(Var a, Var b) {
  if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols())
    throw ContractError("mul: shape mismatch");
  Mat y = val(a).cwiseProduct(val(b));
  require_finite(y, "mul");
  return push(std::move(y), [a, b](Tape& t, const Node& n) {
    t.g(a) += n.grad.cwiseProduct(t.val(b));
    t.g(b) += n.grad.cwiseProduct(t.val(a));
  });
}

Tape::Var Tape::add_scalar(Var x, Var s) {
  if (val(s).size() != 1) throw ContractError("add_scalar: s must be 1x1");
  Mat y = val(x).array() + val(s)(0, 0);
  require_finite(y, "add_scalar");
  return push(std::move(y), [x, s](Tape& t, const Node& n) {
    t.g(x) += n.grad;
    t.g(s)(0, 0) += n.grad.sum();
  });
}

Tape::Var Tape::mul_scalar(Var x, Var s) {
  if (val(s).size() != 1) throw ContractError("mul_scalar: s must be 1x1");
  Mat y = val(x) * val(s)(0, 0);
  require_finite(y, "mul_scalar");
  return push(std::move(y), [x, s](Tape& t, const Node& n) {
    t.g(x) += n.grad * t.val(s)(0, 0);
    t.g(s)(0, 0) += n.grad.cwiseProduct(t.val(x)).sum();
  });
}

Tape::Var Tape::add_colvec(Var x, Var b) {
  if (val(b).cols() != 1 || val(b).rows() != val(x).rows())
    throw ContractError("add_colvec: b must be rows(x)-by-1");
  Mat y = val(x).colwise() + Eigen::VectorXd(val(b).col(0));
  require_finite(y, "add_colvec");
  return push(std::move(y), [x, b](Tape& t, const Node& n) {
    t.g(x) += n.grad;
    t.g(b).col(0) += n.grad.rowwise().sum();
  });
}

Tape::Var Tape::relu(Var x) {
  Mat y = val(x).cwiseMax(0.0);
  return push(std::move(y), [x](Tape& t, const Node& n) {
    // subgradient at 0 is 0
    t.g(x) += n.grad.cwiseProduct((t.val(x).array() > 0.0).cast<double>().matrix());
  });
}

Tape::Var Tape::tanh(Var x) {
  Mat y = val(x).array().tanh();
  require_finite(y, "tanh");
  return push(std::move(y), [x](Tape& t, const Node& n) {
    t.g(x) += n.grad.cwiseProduct((1.0 - n.value.array().square()).matrix());
  });
}

Tape::Var Tape::sigmoid(Var x) {
  Mat y = (1.0 / (1.0 + (-val(x).array()).exp())).matrix();
  require_finite(y, "sigmoid");
  return push(std::move(y), [x](Tape& t, const Node& n) {
    t.g(x) += n.grad.cwiseProduct((n.value.array() * (1.0 - n.value.array())).matrix());
  });
}

Tape::Var Tape::log(Var x) {
  Mat y = val(x).array().log();
  require_finite(y, "log");
  return push(std::move(y), [x](Tape& t, const Node& n) {
    t.g(x) += n.grad.cwiseQuotient(t.val(x));
  });
}

Tape::Var Tape::sqrt(Var x) {
  Mat y = val(x).array().sqrt();
  require_finite(y, "sqrt");
  return push(std::move(y), [x](Tape& t, const Node& n) {
    t.g(x) += (n.grad.array() * 0.5 / n.value.array()).matrix();
  });
}

Tape::Var Tape::reciprocal(Var x) {
  Mat y = val(x).array().inverse();
  require_finite(y, "reciprocal");
  return push(std::move(y), [x](Tape& t, const Node& n) {
    t.g(x) -= (n.grad.array() * n.value.array().square()).matrix();
  });
}

Tape::Var Tape::transpose(Var x) {
  Mat y = val(x).transpose();
  return push(std::move(y), [x](Tape& t, const Node& n) {
    t.g(x) += n.grad.transpose();
  });
}

Tape::Var Tape::sum(Var x) {
  Mat y(1, 1);
  y(0, 0) = val(x).sum();
  require_finite(y, "sum");
  return push(std::move(y), [x](Tape& t, const Node& n) {
    t.g(x).array() += n.grad(0, 0);
  });
}

Tape::Var Tape::row_sums(Var x) {
  Mat y = val(x).rowwise().sum();
  require_finite(y, "row_sums");
  return push(std::move(y), [x](Tape& t, const Node& n) {
    t.g(x).colwise() += Eigen::VectorXd(n.grad.col(0));
  });
}

Tape::Var Tape::softmax(Var x) {
  if (val(x).cols() != 1) throw ContractError("softmax: expects a column vector");
  if (val(x).size() < 1) throw ContractError("softmax: empty input");
  if (!val(x).allFinite()) throw NumericError("softmax: non-finite input");
  Eigen::ArrayXd a = val(x).col(0).array();
  a -= a.maxCoeff();
  Eigen::ArrayXd e = a.exp();
  Mat y = (e / e.sum()).matrix();
  require_finite(y, "softmax");
  return push(std::move(y), [x](Tape& t, const Node& n) {
    const Eigen::ArrayXd y = n.value.col(0).array();
    const Eigen::ArrayXd gy = n.grad.col(0).array();
    double dot = (y * gy).sum();
    t.g(x).col(0) += (y * (gy - dot)).matrix();
  });
}

Tape::Var Tape::l2_normalize_cols(Var x, double eps) {
  if (eps <= 0.0) throw ContractError("l2_normalize_cols: eps must be positive");
  const Mat& X = val(x);
  Mat y(X.rows(), X.cols());
  for (int j = 0; j < X.cols(); ++j) {
    double nrm = X.col(j).norm();
    y.col(j) = X.col(j) / std::max(nrm, eps);
  }
  require_finite(y, "l2_normalize_cols");
  return push(std::move(y), [x, eps](Tape& t, const Node& n) {
    const Mat& X = t.val(x);
    for (int j = 0; j < X.cols(); ++j) {
      double nrm = X.col(j).norm();
      Eigen::VectorXd gj = n.grad.col(j);
      if (nrm >= eps) {
        Eigen::VectorXd yj = n.value.col(j);
        t.g(x).col(j) += (gj - yj * yj.dot(gj)) / nrm;
      } else {
        t.g(x).col(j) += gj / eps;
      }
    }
  });
}

Tape::Var Tape::hstack(const std::vector<Var>& xs) {
  if (xs.empty()) throw ContractError("hstack: empty list");
  int rows = static_cast<int>(val(xs[0]).rows());
  int cols = 0;
  for (Var v : xs) {
    if (val(v).rows() != rows) throw ContractError("hstack: row mismatch");
    cols += static_cast<int>(val(v).cols());
  }
  Mat y(rows, cols);
  int off = 0;
  for (Var v : xs) {
    y.middleCols(off, val(v).cols()) = val(v);
    off += static_cast<int>(val(v).cols());
  }
  return push(std::move(y), [xs](Tape& t, const Node& n) {
    int off = 0;
    for (Var v : xs) {
      int c = static_cast<int>(t.val(v).cols());
      t.g(v) += n.grad.middleCols(off, c);
      off += c;
    }
  });
}

Tape::Var Tape::vstack(const std::vector<Var>& xs) {
  if (xs.empty()) throw ContractError("vstack: empty list");
  int cols = static_cast<int>(val(xs[0]).cols());
  int rows = 0;
  for (Var v : xs) {
    if (val(v).cols() != cols) throw ContractError("vstack: column mismatch");
    rows += static_cast<int>(val(v).rows());
  }
  Mat y(rows, cols);
  int off = 0;
  for (Var v : xs) {
    y.middleRows(off, val(v).rows()) = val(v);
    off += static_cast<int>(val(v).rows());
  }
  return push(std::move(y), [xs](Tape& t, const Node& n) {
    int off = 0;
    for (Var v : xs) {
      int r = static_cast<int>(t.val(v).rows());
      t.g(v) += n.grad.middleRows(off, r);
      off += r;
    }
  });
}

Tape::Var Tape::col(Var x, int j) {
  if (j < 0 || j >= val(x).cols()) throw ContractError("col: index out of range");
  Mat y = val(x).col(j);
  return push(std::move(y), [x, j](Tape& t, const Node& n) {
    t.g(x).col(j) += n.grad.col(0);
  });
}

Tape::Var Tape::rows_gather(Var m, std::vector<int> ids) {
  const Mat& M = val(m);
  for (int id : ids)
    if (id < 0 || id >= M.rows()) throw ContractError("rows_gather: id out of range");
  Mat y(static_cast<int>(ids.size()), M.cols());
  for (std::size_t k = 0; k < ids.size(); ++k) y.row(static_cast<int>(k)) = M.row(ids[k]);
  return push(std::move(y), [m, ids = std::move(ids)](Tape& t, const Node& n) {
    for (std::size_t k = 0; k < ids.size(); ++k)
      t.g(m).row(ids[k]) += n.grad.row(static_cast<int>(k));
  });
}

Tape::Var Tape::dropout(Var x, double rate, bool train, std::mt19937_64& rng) {
  if (rate >= 1.0 || rate < 0.0) throw ContractError("dropout: rate must be in [0,1)");
  if (!train || rate == 0.0) {
    // identity, bit-for-bit
    Mat y = val(x);
    return push(std::move(y), [x](Tape& t, const Node& n) { t.g(x) += n.grad; });
  }
  const Mat& X = val(x);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double keep = 1.0 - rate;
  auto mask = std::make_shared<Mat>(X.rows(), X.cols());
  for (int j = 0; j < X.cols(); ++j)
    for (int i = 0; i < X.rows(); ++i)
      (*mask)(i, j) = unif(rng) < rate ? 0.0 : 1.0 / keep;
  Mat y = X.cwiseProduct(*mask);
  require_finite(y, "dropout");
  return push(std::move(y), [x, mask](Tape& t, const Node& n) {
    t.g(x) += n.grad.cwiseProduct(*mask);
  });
}

Tape::Var Tape::scale(Var x, double c) {
  Mat y = val(x) * c;
  require_finite(y, "scale");
  return push(std::move(y), [x, c](Tape& t, const Node& n) {
    t.g(x) += n.grad * c;
  });
}

Tape::Var Tape::add_const(Var x, double c) {
  Mat y = val(x).array() + c;
  require_finite(y, "add_const");
  return push(std::move(y), [x](Tape& t, const Node& n) {
    t.g(x) += n.grad;
  });
}

void Tape::backward(Var output) {
  if (val(output).size() != 1) throw ContractError("backward: output must be scalar");
  if (!std::isfinite(val(output)(0, 0))) throw NumericError("backward: non-finite output");
  nodes_[check(output)].grad(0, 0) = 1.0;
  for (int i = output; i >= 0; --i) {
    const Node& n = nodes_[i];
    if (n.back && n.grad.cwiseAbs().sum() != 0.0) n.back(*this, n);
  }
}

Tape::Var linear(Tape& t, Tape::Var x, Tape::Var W, Tape::Var b) {
  Tape::Var y = t.matmul(W, x);
  if (b >= 0) y = t.add_colvec(y, b);
  return y;
}

}  // namespace fga
