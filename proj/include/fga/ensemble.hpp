#ifndef FGA_ENSEMBLE_HPP
#define FGA_ENSEMBLE_HPP

#include "fga/model.hpp"

namespace fga {

// Arithmetic mean of per-model probabilities. Member configs must hash
// identically up to the training seed. Written so that averaging identical
// members reproduces the single-model output bit-exactly.
Mat ensemble_predict(const std::vector<Model*>& models, const DialogRecord& record);

}  // namespace fga

#endif  // FGA_ENSEMBLE_HPP
