#include "fga/checkpoint.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <sstream>

namespace fga {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "fga-checkpoint-v1";

json read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("checkpoint: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ContractError("checkpoint: invalid manifest JSON: " + std::string(e.what()));
  }
  if (!j.is_object() || j.value("format", "") != kFormat)
    throw ContractError("checkpoint: unrecognized format in " + path);
  return j;
}

}  // namespace

void save_checkpoint(const std::string& path, Model& model) {
  // quantize in place so the written blob equals the live parameters
  for (auto& [_, p] : model.params())
    p->value = p->value.cast<float>().cast<double>();

  json params = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, p] : model.params()) {
    params.push_back({{"name", name},
                      {"rows", p->value.rows()},
                      {"cols", p->value.cols()},
                      {"dtype", "f32"},
                      {"byte_offset", offset}});
    offset += static_cast<std::uint64_t>(p->value.size()) * sizeof(float);
  }

  json bn = json::object();
  for (auto& [key, st] : model.bn_all())
    bn[key] = {{"running_mean", st->running_mean},
               {"running_var", st->running_var},
               {"initialized", st->initialized}};

  json pruned = json::array();
  for (const auto& [tgt, src] : model.pruned_pairs()) pruned.push_back({tgt, src});

  json manifest = {{"format", kFormat},
                   {"config", json::parse(model.config().to_json_string())},
                   {"config_hash", model.config().hash_hex()},
                   {"params", params},
                   {"batchnorm", bn},
                   {"pruned_pairs", pruned}};

  std::ofstream mf(path);
  if (!mf) throw ContractError("checkpoint: cannot write " + path);
  mf << manifest.dump(2) << "\n";

  std::ofstream bf(path + ".bin", std::ios::binary);
  if (!bf) throw ContractError("checkpoint: cannot write " + path + ".bin");
  for (const auto& [_, p] : model.params()) {
    Eigen::MatrixXf f = p->value.cast<float>();
    bf.write(reinterpret_cast<const char*>(f.data()),
             static_cast<std::streamsize>(f.size() * sizeof(float)));
  }
  if (!bf) throw ContractError("checkpoint: short write to " + path + ".bin");
}

std::unique_ptr<Model> load_checkpoint(const std::string& path) {
  json j = read_manifest(path);
  RunConfig cfg = RunConfig::from_json_string(j.at("config").dump());
  if (j.value("config_hash", "") != cfg.hash_hex())
    throw ContractError("checkpoint: config hash mismatch in " + path);
  auto model = std::make_unique<Model>(cfg);
  load_checkpoint_into(path, *model);
  return model;
}

void load_checkpoint_into(const std::string& path, Model& model_ref) {
  json j = read_manifest(path);
  if (j.value("config_hash", "") != model_ref.config().hash_hex())
    throw ContractError("checkpoint: config hash does not match the model: " + path);
  Model* model = &model_ref;

  std::ifstream bf(path + ".bin", std::ios::binary);
  if (!bf) throw ContractError("checkpoint: cannot open " + path + ".bin");
  for (const auto& entry : j.at("params")) {
    const std::string name = entry.at("name").get<std::string>();
    if (!model->params().has(name))
      throw ContractError("checkpoint: unknown parameter " + name);
    Parameter& p = model->params().at(name);
    if (entry.at("rows").get<long>() != p.value.rows() ||
        entry.at("cols").get<long>() != p.value.cols())
      throw ContractError("checkpoint: shape mismatch for " + name);
    if (entry.at("dtype").get<std::string>() != "f32")
      throw ContractError("checkpoint: unsupported dtype for " + name);
    bf.seekg(static_cast<std::streamoff>(entry.at("byte_offset").get<std::uint64_t>()));
    Eigen::MatrixXf f(p.value.rows(), p.value.cols());
    bf.read(reinterpret_cast<char*>(f.data()),
            static_cast<std::streamsize>(f.size() * sizeof(float)));
    if (!bf) throw ContractError("checkpoint: truncated blob reading " + name);
    p.value = f.cast<double>();
  }

  auto bn = model->bn_all();
  for (const auto& [key, st] : j.at("batchnorm").items()) {
    auto it = bn.find(key);
    if (it == bn.end()) throw ContractError("checkpoint: unknown batchnorm state " + key);
    it->second->running_mean = st.at("running_mean").get<double>();
    it->second->running_var = st.at("running_var").get<double>();
    it->second->initialized = st.at("initialized").get<bool>();
  }

  for (const auto& pr : j.at("pruned_pairs"))
    model->prune_pair(pr.at(0).get<std::string>(), pr.at(1).get<std::string>());
}

std::string checkpoint_config_hash(const std::string& path) {
  return read_manifest(path).value("config_hash", "");
}

}  // namespace fga
