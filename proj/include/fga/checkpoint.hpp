#ifndef FGA_CHECKPOINT_HPP
#define FGA_CHECKPOINT_HPP

#include "fga/model.hpp"

#include <memory>
#include <string>

namespace fga {

// Two files: a JSON manifest at `path` (parameter table with byte
// offsets, batch-norm running stats, pruned pairs, the full config and
// its hash) and a blob at `path` + ".bin" of little-endian f32 values in
// column-major order.
//
// Saving quantizes the model's parameters to f32 in place, so the live
// model and its checkpoint agree bit-exactly and save -> load -> save
// reproduces identical files.
void save_checkpoint(const std::string& path, Model& model);

std::unique_ptr<Model> load_checkpoint(const std::string& path);

// Loads weights and batch-norm stats into an existing model whose config
// hash matches the manifest.
void load_checkpoint_into(const std::string& path, Model& model);

// Config hash stored in the manifest, without loading the weights.
std::string checkpoint_config_hash(const std::string& path);

}  // namespace fga

#endif  // FGA_CHECKPOINT_HPP
