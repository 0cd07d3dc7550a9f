#ifndef FGA_BATCHNORM_HPP
#define FGA_BATCHNORM_HPP

#include "fga/autodiff.hpp"

namespace fga {

// Scalar batch normalization over a pool of score matrices: one gamma/beta
// pair, statistics pooled over every element of every matrix handed to a
// single normalize call. Population (biased) variance.
struct BatchNormState {
  Parameter* gamma = nullptr;  // 1x1
  Parameter* beta = nullptr;   // 1x1
  double running_mean = 0.0;
  double running_var = 1.0;
  double momentum = 0.1;
  double eps = 1e-5;
  bool initialized = false;  // set after first train-mode pass or checkpoint load
};

// Normalizes the pool jointly (train) or with running stats (eval).
// Train mode updates running statistics as a side effect.
std::vector<Tape::Var> batchnorm_joint(Tape& t, const std::vector<Tape::Var>& xs,
                                       BatchNormState& st, bool train);

// Single-tensor convenience used by the unit-level contract.
Tape::Var batchnorm_scalar(Tape& t, Tape::Var x, BatchNormState& st, bool train);

}  // namespace fga

#endif  // FGA_BATCHNORM_HPP
