#include "fga/init.hpp"

#include <cmath>

namespace fga {

void fill_normal(Mat& m, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (int j = 0; j < m.cols(); ++j)
    for (int i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
}

void kaiming_normal(Mat& m, int fan_in, std::mt19937_64& rng) {
  fill_normal(m, std::sqrt(2.0 / static_cast<double>(fan_in)), rng);
}

}  // namespace fga
