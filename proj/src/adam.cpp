#include "fga/adam.hpp"

#include <cmath>

namespace fga {

void Adam::step(ParamRegistry& reg) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (auto& [name, p] : reg) {
    auto it = state_.find(name);
    if (it == state_.end()) {
      it = state_.emplace(name, Moments{Mat::Zero(p->value.rows(), p->value.cols()),
                                        Mat::Zero(p->value.rows(), p->value.cols())}).first;
    }
    Moments& s = it->second;
    s.m = beta1_ * s.m + (1.0 - beta1_) * p->grad;
    s.v = beta2_ * s.v + (1.0 - beta2_) * p->grad.cwiseProduct(p->grad);
    Mat mhat = s.m / bc1;
    Mat vhat = s.v / bc2;
    p->value.array() -= lr_ * mhat.array() / (vhat.array().sqrt() + eps_);
    p->zero_grad();
  }
}

}  // namespace fga
