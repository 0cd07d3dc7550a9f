#ifndef FGA_AUTODIFF_HPP
#define FGA_AUTODIFF_HPP

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fga {

using Mat = Eigen::MatrixXd;

// Thrown when a primitive produces or receives non-finite values.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown on shape/contract violations.
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A named trainable leaf. Gradients accumulate (sum) across every use
// within a tape, which is what group-shared factor weights rely on.
struct Parameter {
  std::string name;
  Mat value;
  Mat grad;

  Parameter(std::string n, int rows, int cols)
      : name(std::move(n)), value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

// Name-keyed parameter store. Iteration order is the sorted name order,
// which keeps optimizer updates and checkpoints deterministic.
class ParamRegistry {
 public:
  Parameter& add(const std::string& name, int rows, int cols) {
    if (params_.count(name)) throw ContractError("duplicate parameter name: " + name);
    auto p = std::make_shared<Parameter>(name, rows, cols);
    params_.emplace(name, p);
    return *p;
  }
  Parameter& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ContractError("unknown parameter: " + name);
    return *it->second;
  }
  const Parameter& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ContractError("unknown parameter: " + name);
    return *it->second;
  }
  bool has(const std::string& name) const { return params_.count(name) != 0; }
  void zero_grads() {
    for (auto& [_, p] : params_) p->zero_grad();
  }
  std::size_t size() const { return params_.size(); }
  std::size_t coord_count() const {
    std::size_t n = 0;
    for (auto& [_, p] : params_) n += static_cast<std::size_t>(p->value.size());
    return n;
  }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, std::shared_ptr<Parameter>> params_;
};

// Reverse-mode tape over dense matrices. Vectors are n-by-1 columns,
// scalars are 1-by-1. One tape per forward pass; backward() walks the
// nodes in reverse creation order.
class Tape {
 public:
  using Var = int;

  Var constant(Mat v);
  Var param(Parameter& p);

  const Mat& val(Var v) const { return nodes_[check(v)].value; }
  const Mat& grad_of(Var v) const { return nodes_[check(v)].grad; }

  // primitives
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);            // elementwise
  Var add_scalar(Var x, Var s);     // s is 1x1, broadcast
  Var mul_scalar(Var x, Var s);
  Var add_colvec(Var x, Var b);     // b is rows(x)-by-1, added to every column
  Var relu(Var x);
  Var tanh(Var x);
  Var sigmoid(Var x);
  Var log(Var x);
  Var sqrt(Var x);
  Var reciprocal(Var x);
  Var transpose(Var x);
  Var sum(Var x);                   // 1x1 sum over all elements
  Var row_sums(Var x);              // rows(x)-by-1
  Var softmax(Var x);               // x is a column vector; max-subtracted
  Var l2_normalize_cols(Var x, double eps = 1e-12);
  Var hstack(const std::vector<Var>& xs);
  Var vstack(const std::vector<Var>& xs);
  Var col(Var x, int j);
  Var rows_gather(Var m, std::vector<int> ids);  // ids.size()-by-cols(m)
  Var dropout(Var x, double rate, bool train, std::mt19937_64& rng);
  Var scale(Var x, double c);
  Var add_const(Var x, double c);

  // seeds grad of `output` (must be 1x1) with 1 and accumulates into
  // every reachable node and parameter leaf
  void backward(Var output);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&, const Node&)> back;  // null for leaves
  };

  Var push(Mat value, std::function<void(Tape&, const Node&)> back);
  int check(Var v) const {
    if (v < 0 || v >= static_cast<int>(nodes_.size())) throw ContractError("invalid tape var");
    return v;
  }
  Mat& g(Var v) { return nodes_[v].grad; }

  std::vector<Node> nodes_;
};

// y = W x (+ b). The workhorse behind every linear embedding.
Tape::Var linear(Tape& t, Tape::Var x, Tape::Var W, Tape::Var b = -1);

}  // namespace fga

#endif  // FGA_AUTODIFF_HPP
