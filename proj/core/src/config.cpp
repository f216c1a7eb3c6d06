#include "sid/config.hpp"

#include <fstream>
#include <sstream>

#include "json_io.hpp"

namespace sid::jsonio {

Section::Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
  if (!node_.is_object()) throw config::ConfigError(path_ + ": expected an object");
}

const json& Section::child(const char* key) {
  static const json empty = json::object();
  allowed_.insert(key);
  return node_.contains(key) ? node_.at(key) : empty;
}

void Section::finish() const {
  for (const auto& item : node_.items()) {
    if (!allowed_.count(item.key())) {
      throw config::ConfigError("unknown key '" + path_ + "." + item.key() + "'");
    }
  }
}

void Section::fail(const std::string& key, const std::string& why) const {
  throw config::ConfigError(path_ + "." + key + ": " + why);
}

json to_json(const nn::NetworkConfig& c) {
  return {{"data_dim", c.data_dim},
          {"hidden_width", c.hidden_width},
          {"depth", c.depth},
          {"sigma_data", c.sigma_data},
          {"time_embed_dim", c.time_embed_dim}};
}

nn::NetworkConfig network_from_json(const json& j, const std::string& path) {
  nn::NetworkConfig c;
  Section s(j, path);
  s.get("data_dim", c.data_dim);
  s.get("hidden_width", c.hidden_width);
  s.get("depth", c.depth);
  s.get("sigma_data", c.sigma_data);
  s.get("time_embed_dim", c.time_embed_dim);
  s.finish();
  return c;
}

json to_json(const diffusion::NoiseSchedule& s) {
  return {{"sigma_min", s.sigma_min}, {"sigma_max", s.sigma_max}, {"rho", s.rho}, {"t_max", s.t_max}};
}

diffusion::NoiseSchedule schedule_from_json(const json& j, const std::string& path) {
  diffusion::NoiseSchedule c;
  Section s(j, path);
  s.get("sigma_min", c.sigma_min);
  s.get("sigma_max", c.sigma_max);
  s.get("rho", c.rho);
  s.get("t_max", c.t_max);
  s.finish();
  return c;
}

json to_json(const train::TeacherConfig& c) {
  return {{"lr", c.lr},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"eps", c.eps},
          {"ema_kimg", c.ema_kimg},
          {"batch_size", c.batch_size},
          {"budget_images", c.budget_images},
          {"log_every_images", c.log_every_images},
          {"p_mean", c.p_mean},
          {"p_std", c.p_std}};
}

train::TeacherConfig teacher_from_json(const json& j, const std::string& path) {
  train::TeacherConfig c;
  Section s(j, path);
  s.get("lr", c.lr);
  s.get("beta1", c.beta1);
  s.get("beta2", c.beta2);
  s.get("eps", c.eps);
  s.get("ema_kimg", c.ema_kimg);
  s.get("batch_size", c.batch_size);
  s.get("budget_images", c.budget_images);
  s.get("log_every_images", c.log_every_images);
  s.get("p_mean", c.p_mean);
  s.get("p_std", c.p_std);
  s.finish();
  return c;
}

namespace {

std::string objective_name(loss::GeneratorObjective o) {
  return o == loss::GeneratorObjective::Fused ? "fused" : "l1";
}

}  // namespace

json to_json(const train::SiDConfig& c) {
  return {{"alpha", c.alpha},
          {"lr_psi", c.lr_psi},
          {"lr_theta", c.lr_theta},
          {"adam_beta1_psi", c.adam_beta1_psi},
          {"adam_beta1_theta", c.adam_beta1_theta},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},
          {"loss_scale_psi", c.loss_scale_psi},
          {"loss_scale_theta", c.loss_scale_theta},
          {"ema_kimg", c.ema_kimg},
          {"batch_size", c.batch_size},
          {"sigma_init", c.sigma_init},
          {"budget_images", c.budget_images},
          {"metric_every_images", c.metric_every_images},
          {"objective", objective_name(c.objective)},
          {"score_gradients", c.score_gradients},
          {"weight_floor", c.weight_floor},
          {"p_mean", c.p_mean},
          {"p_std", c.p_std}};
}

train::SiDConfig distill_from_json(const json& j, const std::string& path) {
  train::SiDConfig c;
  Section s(j, path);
  s.get("alpha", c.alpha);
  s.get("lr_psi", c.lr_psi);
  s.get("lr_theta", c.lr_theta);
  s.get("adam_beta1_psi", c.adam_beta1_psi);
  s.get("adam_beta1_theta", c.adam_beta1_theta);
  s.get("adam_beta2", c.adam_beta2);
  s.get("adam_eps", c.adam_eps);
  s.get("loss_scale_psi", c.loss_scale_psi);
  s.get("loss_scale_theta", c.loss_scale_theta);
  s.get("ema_kimg", c.ema_kimg);
  s.get("batch_size", c.batch_size);
  s.get("sigma_init", c.sigma_init);
  s.get("budget_images", c.budget_images);
  s.get("metric_every_images", c.metric_every_images);
  std::string objective = objective_name(c.objective);
  s.get("objective", objective);
  if (objective == "fused") {
    c.objective = loss::GeneratorObjective::Fused;
  } else if (objective == "l1") {
    c.objective = loss::GeneratorObjective::L1Only;
  } else {
    s.fail("objective", "expected \"fused\" or \"l1\", got \"" + objective + "\"");
  }
  s.get("score_gradients", c.score_gradients);
  s.get("weight_floor", c.weight_floor);
  s.get("p_mean", c.p_mean);
  s.get("p_std", c.p_std);
  s.finish();
  return c;
}

}  // namespace sid::jsonio

namespace sid::config {

using jsonio::json;

void RunConfig::propagate() {
  network.data_dim = dataset.dim();
  teacher.network = network;
  teacher.seed = seed;
  distill.seed = seed;
}

void RunConfig::validate() const {
  try {
    network.validate();
    teacher.validate();
    distill.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (dataset.kind == data::DatasetKind::Gaussian && dataset.gaussian_mean.empty()) {
    throw ConfigError("dataset.gaussian_mean must have at least one entry");
  }
  if (!init_offset.empty() && init_offset.size() != dataset.dim()) {
    throw ConfigError("distill.init_offset length must equal the data dimension");
  }
  if (eval.metric_samples <= dataset.dim() || eval.final_samples <= dataset.dim()) {
    throw ConfigError("eval sample counts must exceed the data dimension");
  }
  if (eval.heun_steps < 1) throw ConfigError("eval.heun_steps must be at least 1");
}

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  jsonio::Section top(root, "config");
  top.get("seed", c.seed);
  top.get("out_dir", c.out_dir);
  {
    jsonio::Section s(top.child("dataset"), "dataset");
    std::string name = data::dataset_name(c.dataset.kind);
    s.get("name", name);
    try {
      c.dataset.kind = data::parse_dataset(name);
    } catch (const std::invalid_argument& e) {
      s.fail("name", e.what());
    }
    s.get("gaussian_mean", c.dataset.gaussian_mean);
    s.finish();
  }
  {
    jsonio::Section s(top.child("network"), "network");
    s.get("hidden_width", c.network.hidden_width);
    s.get("depth", c.network.depth);
    s.get("sigma_data", c.network.sigma_data);
    s.get("time_embed_dim", c.network.time_embed_dim);
    s.finish();
  }
  c.distill.schedule = jsonio::schedule_from_json(top.child("schedule"), "schedule");
  c.teacher = jsonio::teacher_from_json(top.child("teacher"), "teacher");
  {
    json distill = top.child("distill");
    if (distill.is_object() && distill.contains("init_offset")) {
      try {
        c.init_offset = distill.at("init_offset").get<std::vector<double>>();
      } catch (const json::exception& e) {
        throw ConfigError(std::string("distill.init_offset: ") + e.what());
      }
      distill.erase("init_offset");
    }
    const auto schedule = c.distill.schedule;
    c.distill = jsonio::distill_from_json(distill, "distill");
    c.distill.schedule = schedule;
  }
  {
    jsonio::Section s(top.child("eval"), "eval");
    s.get("metric_samples", c.eval.metric_samples);
    s.get("final_samples", c.eval.final_samples);
    s.get("heun_steps", c.eval.heun_steps);
    s.finish();
  }
  top.finish();
  c.propagate();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

std::string to_json_text(const RunConfig& c) {
  json network = jsonio::to_json(c.network);
  network.erase("data_dim");
  json distill = jsonio::to_json(c.distill);
  if (!c.init_offset.empty()) distill["init_offset"] = c.init_offset;
  const json root = {
      {"seed", c.seed},
      {"out_dir", c.out_dir},
      {"dataset", {{"name", data::dataset_name(c.dataset.kind)}, {"gaussian_mean", c.dataset.gaussian_mean}}},
      {"network", network},
      {"schedule", jsonio::to_json(c.distill.schedule)},
      {"teacher", jsonio::to_json(c.teacher)},
      {"distill", distill},
      {"eval",
       {{"metric_samples", c.eval.metric_samples},
        {"final_samples", c.eval.final_samples},
        {"heun_steps", c.eval.heun_steps}}}};
  return root.dump(2);
}

}  // namespace sid::config
