#include "fga/grad_check.hpp"

#include <cmath>

namespace fga {

double grad_check(const std::function<double(bool)>& f, ParamRegistry& reg, double h) {
  reg.zero_grads();
  double base = f(true);
  if (!std::isfinite(base)) throw NumericError("grad_check: non-finite objective");

  std::map<std::string, Mat> analytic;
  for (auto& [name, p] : reg) analytic[name] = p->grad;

  double max_rel = 0.0;
  for (auto& [name, p] : reg) {
    Mat& v = p->value;
    const Mat& a = analytic[name];
    for (int j = 0; j < v.cols(); ++j) {
      for (int i = 0; i < v.rows(); ++i) {
        const double orig = v(i, j);
        v(i, j) = orig + h;
        double fp = f(false);
        v(i, j) = orig - h;
        double fm = f(false);
        v(i, j) = orig;
        double numeric = (fp - fm) / (2.0 * h);
        double denom = std::max({std::abs(a(i, j)), std::abs(numeric), 1e-8});
        max_rel = std::max(max_rel, std::abs(a(i, j) - numeric) / denom);
      }
    }
  }
  return max_rel;
}

}  // namespace fga
