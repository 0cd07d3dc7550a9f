#include "fga/ensemble.hpp"

namespace fga {

Mat ensemble_predict(const std::vector<Model*>& models, const DialogRecord& record) {
  if (models.empty()) throw ContractError("ensemble: no models");
  // members may differ only by their training seed
  auto arch_hash = [](const Model* m) {
    RunConfig c = m->config();
    c.seed = 0;
    return c.hash_hex();
  };
  const std::string hash = arch_hash(models[0]);
  for (const Model* m : models)
    if (arch_hash(m) != hash) throw ContractError("ensemble: member configs differ");

  Mat base = models[0]->forward(record).probs;
  // mean as base + mean(deviation): identical members stay bit-exact
  Mat dev = Mat::Zero(base.rows(), 1);
  for (std::size_t k = 1; k < models.size(); ++k)
    dev += models[k]->forward(record).probs - base;
  return base + dev / static_cast<double>(models.size());
}

}  // namespace fga
