#ifndef FGA_ADAM_HPP
#define FGA_ADAM_HPP

#include "fga/autodiff.hpp"

namespace fga {

// Adam with bias correction. step() consumes and zeroes the accumulated
// gradients of every parameter in the registry.
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamRegistry& reg);
  int t() const { return t_; }

 private:
  struct Moments {
    Mat m, v;
  };
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace fga

#endif  // FGA_ADAM_HPP
