#ifndef FGA_INIT_HPP
#define FGA_INIT_HPP

#include "fga/autodiff.hpp"

namespace fga {

// Kaiming normal: N(0, sqrt(2 / fan_in)).
void kaiming_normal(Mat& m, int fan_in, std::mt19937_64& rng);

void fill_normal(Mat& m, double stddev, std::mt19937_64& rng);

}  // namespace fga

#endif  // FGA_INIT_HPP
