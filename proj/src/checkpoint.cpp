#include "sasreg/checkpoint.hpp"

#include <fstream>
#include <string>

#include "sasreg/error.hpp"

namespace sasreg::ckpt {
namespace fs = std::filesystem;

namespace {

fs::path temp_sibling(const fs::path& p) { return fs::path(p.string() + ".tmp"); }

void commit(const fs::path& tmp, const fs::path& final_path) {
  std::error_code ec;
  fs::rename(tmp, final_path, ec);
  if (ec) fail(ErrorKind::io, "cannot move " + tmp.string() + " into place: " + ec.message());
}

}  // namespace

nlohmann::json to_json(const model::ModelConfig& c) {
  return {{"scene_channels", c.scene_channels},
          {"code_dim", c.code_dim},
          {"scene_base", c.scene_base},
          {"appearance_base", c.appearance_base},
          {"levels", c.levels},
          {"norm_eps", c.norm_eps},
          {"learned_domain_codes", c.learned_domain_codes}};
}

model::ModelConfig model_config_from_json(const nlohmann::json& j) {
  model::ModelConfig c;
  c.scene_channels = j.at("scene_channels").get<int>();
  c.code_dim = j.at("code_dim").get<int>();
  c.scene_base = j.at("scene_base").get<int>();
  c.appearance_base = j.at("appearance_base").get<int>();
  c.levels = j.at("levels").get<int>();
  c.norm_eps = j.at("norm_eps").get<double>();
  c.learned_domain_codes = j.at("learned_domain_codes").get<bool>();
  return c;
}

nlohmann::json to_json(const CheckpointMeta& m) {
  nlohmann::json j = {{"schema_version", m.schema_version},
                      {"C_S", m.model.scene_channels},
                      {"C_A", m.model.code_dim},
                      {"scene_base_channels", m.model.scene_base},
                      {"appearance_base_channels", m.model.appearance_base},
                      {"levels", m.model.levels},
                      {"model", to_json(m.model)},
                      {"parameter_count", m.parameter_count},
                      {"step", m.step},
                      {"epoch", m.epoch},
                      {"loss_weights", loss::to_json(m.weights)},
                      {"ablation", loss::to_json(m.ablation)},
                      {"seed", m.seed}};
  j["val_ncc"] = m.val_ncc ? nlohmann::json(*m.val_ncc) : nlohmann::json(nullptr);
  return j;
}

CheckpointMeta checkpoint_meta_from_json(const nlohmann::json& j) {
  CheckpointMeta m;
  try {
    m.schema_version = j.at("schema_version").get<int>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::checkpoint, std::string("checkpoint sidecar: ") + e.what());
  }
  if (m.schema_version != CheckpointMeta::kSchemaVersion) {
    fail(ErrorKind::schema_mismatch, "checkpoint schema_version " +
                                         std::to_string(m.schema_version) + " (expected " +
                                         std::to_string(CheckpointMeta::kSchemaVersion) + ")");
  }
  try {
    m.model = model_config_from_json(j.at("model"));
    m.parameter_count = j.at("parameter_count").get<std::int64_t>();
    m.step = j.at("step").get<std::int64_t>();
    m.epoch = j.at("epoch").get<int>();
    m.weights = loss::loss_weights_from_json(j.at("loss_weights"));
    m.ablation = loss::ablation_flags_from_json(j.at("ablation"));
    m.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("val_ncc") && !j["val_ncc"].is_null()) m.val_ncc = j["val_ncc"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::checkpoint, std::string("checkpoint sidecar: ") + e.what());
  }
  return m;
}

fs::path sidecar_path(const fs::path& blob) {
  fs::path p = blob;
  return p.replace_extension(".json");
}

fs::path optimizer_path(const fs::path& blob) {
  fs::path p = blob;
  return p.replace_extension(".optim.pt");
}

void save_checkpoint(const fs::path& blob, model::SasNet& net, const CheckpointMeta& meta,
                     torch::optim::Optimizer* optimizer) {
  if (blob.has_parent_path()) fs::create_directories(blob.parent_path());
  try {
    torch::save(net, temp_sibling(blob).string());
    if (optimizer != nullptr) torch::save(*optimizer, temp_sibling(optimizer_path(blob)).string());
  } catch (const c10::Error& e) {
    fail(ErrorKind::io, "cannot write checkpoint " + blob.string() + ": " + e.what_without_backtrace());
  }
  {
    std::ofstream out(temp_sibling(sidecar_path(blob)));
    out << to_json(meta).dump(2) << '\n';
    if (!out) fail(ErrorKind::io, "cannot write " + sidecar_path(blob).string());
  }
  commit(temp_sibling(blob), blob);
  if (optimizer != nullptr) commit(temp_sibling(optimizer_path(blob)), optimizer_path(blob));
  commit(temp_sibling(sidecar_path(blob)), sidecar_path(blob));
}

CheckpointMeta read_checkpoint_meta(const fs::path& blob) {
  const fs::path side = sidecar_path(blob);
  std::ifstream in(side);
  if (!in) fail(ErrorKind::checkpoint, "missing checkpoint sidecar " + side.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::checkpoint, "unreadable checkpoint sidecar " + side.string() + ": " + e.what());
  }
  return checkpoint_meta_from_json(j);
}

LoadedCheckpoint load_checkpoint(const fs::path& blob, torch::Device device) {
  if (!fs::exists(blob)) fail(ErrorKind::checkpoint, "missing checkpoint " + blob.string());
  LoadedCheckpoint out;
  out.meta = read_checkpoint_meta(blob);
  out.net = model::SasNet(out.meta.model);
  const auto count = model::parameter_count(*out.net);
  if (count != out.meta.parameter_count) {
    fail(ErrorKind::schema_mismatch, "checkpoint sidecar declares " +
                                         std::to_string(out.meta.parameter_count) +
                                         " parameters, architecture has " + std::to_string(count));
  }
  try {
    torch::load(out.net, blob.string());
  } catch (const c10::Error& e) {
    fail(ErrorKind::checkpoint, "cannot read checkpoint " + blob.string() + ": " +
                                    e.what_without_backtrace());
  }
  out.net->to(device);
  out.net->eval();
  return out;
}

bool load_optimizer_state(const fs::path& blob, torch::optim::Optimizer& optimizer) {
  const fs::path p = optimizer_path(blob);
  if (!fs::exists(p)) return false;
  try {
    torch::load(optimizer, p.string());
  } catch (const c10::Error& e) {
    fail(ErrorKind::checkpoint, "cannot read optimizer state " + p.string() + ": " +
                                    e.what_without_backtrace());
  }
  return true;
}

void copy_checkpoint(const fs::path& from, const fs::path& to) {
  if (to.has_parent_path()) fs::create_directories(to.parent_path());
  const auto opts = fs::copy_options::overwrite_existing;
  fs::copy_file(from, to, opts);
  fs::copy_file(sidecar_path(from), sidecar_path(to), opts);
  if (fs::exists(optimizer_path(from))) fs::copy_file(optimizer_path(from), optimizer_path(to), opts);
}

}  // namespace sasreg::ckpt
