#ifndef FGA_GRAD_CHECK_HPP
#define FGA_GRAD_CHECK_HPP

#include "fga/autodiff.hpp"

namespace fga {

// Compares accumulated gradients against central finite differences.
// `f(want_grad)` must build a fresh tape, run the (deterministic) forward
// pass and, when want_grad is true, call backward so gradients land in the
// registry. Returns the max relative error over every parameter coordinate,
// with denominator max(|analytic|, |numeric|, 1e-8).
double grad_check(const std::function<double(bool want_grad)>& f, ParamRegistry& reg,
                  double h = 1e-5);

}  // namespace fga

#endif  // FGA_GRAD_CHECK_HPP
