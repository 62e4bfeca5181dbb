#include "trimodal/run_config.hpp"

#include <functional>
#include <map>

#include <json.hpp>

#include "trimodal/binary_io.hpp"
#include "trimodal/error.hpp"

namespace trimodal {

using nlohmann::json;

namespace {

template <typename Cfg>
struct Field {
  std::function<json(const Cfg&)> get;
  std::function<void(Cfg&, const json&)> set;
};

template <typename Cfg, typename T>
Field<Cfg> bind(T Cfg::*member) {
  return {[member](const Cfg& c) { return json(c.*member); },
          [member](Cfg& c, const json& j) { c.*member = j.get<T>(); }};
}

template <typename Cfg, typename Sub, typename T>
Field<Cfg> bind(Sub Cfg::*sub, T Sub::*member) {
  return {[sub, member](const Cfg& c) { return json((c.*sub).*member); },
          [sub, member](Cfg& c, const json& j) { (c.*sub).*member = j.get<T>(); }};
}

template <typename Cfg>
Field<Cfg> bind_variant(Variant Cfg::*member) {
  return {[member](const Cfg& c) { return json(std::string(variant_name(c.*member))); },
          [member](Cfg& c, const json& j) { c.*member = parse_variant(j.get<std::string>()); }};
}

template <typename Cfg>
using FieldTable = std::vector<std::pair<std::string, Field<Cfg>>>;

const FieldTable<ModelConfig>& model_fields() {
  static const FieldTable<ModelConfig> t = {
      {"latent_dim", bind(&ModelConfig::latent_dim)},
      {"token_dim", bind(&ModelConfig::token_dim)},
      {"layers", bind(&ModelConfig::layers)},
      {"heads", bind(&ModelConfig::heads)},
      {"ffn_dim", bind(&ModelConfig::ffn_dim)},
      {"text_dim", bind(&ModelConfig::text_dim)},
      {"text_tokens", bind(&ModelConfig::text_tokens)},
      {"grid_x", bind(&ModelConfig::grid_x)},
      {"grid_y", bind(&ModelConfig::grid_y)},
      {"grid_z", bind(&ModelConfig::grid_z)},
      {"motion_stride", bind(&ModelConfig::motion_stride)},
      {"max_tokens", bind(&ModelConfig::max_tokens)},
      {"room_width", bind(&ModelConfig::room_width)},
      {"room_depth", bind(&ModelConfig::room_depth)},
      {"room_height", bind(&ModelConfig::room_height)},
      {"cross_modal", bind(&ModelConfig::cross_modal)},
      {"shared_cross_encoder", bind(&ModelConfig::shared_cross_encoder)},
      {"init_seed", bind(&ModelConfig::init_seed)},
  };
  return t;
}

const FieldTable<TrainerConfig>& trainer_fields() {
  static const FieldTable<TrainerConfig> t = {
      {"batch_size", bind(&TrainerConfig::batch_size)},
      {"epochs", bind(&TrainerConfig::epochs)},
      {"learning_rate", bind(&TrainerConfig::learning_rate)},
      {"beta1", bind(&TrainerConfig::beta1)},
      {"beta2", bind(&TrainerConfig::beta2)},
      {"adam_eps", bind(&TrainerConfig::adam_eps)},
      {"weight_decay", bind(&TrainerConfig::weight_decay)},
      {"seed", bind(&TrainerConfig::seed)},
      {"tau", bind(&TrainerConfig::tau)},
      {"variant", bind_variant(&TrainerConfig::variant)},
      {"eval_every", bind(&TrainerConfig::eval_every)},
      {"checkpoint_every", bind(&TrainerConfig::checkpoint_every)},
      {"kl_weight", bind(&TrainerConfig::kl_weight)},
  };
  return t;
}

// Run config keys are flat; sub-config fields are exposed under their own
// names, with trainer_seed / model_seed disambiguating the seeds.
const FieldTable<RunConfig>& run_fields() {
  static const FieldTable<RunConfig> t = [] {
    using R = RunConfig;
    using G = GeneratorConfig;
    using M = ModelConfig;
    using T = TrainerConfig;
    using E = EvalConfig;
    FieldTable<R> f = {
        {"seed", bind(&R::generator, &G::seed)},
        {"room_width", bind(&R::generator, &G::room_width)},
        {"room_depth", bind(&R::generator, &G::room_depth)},
        {"room_height", bind(&R::generator, &G::room_height)},
        {"min_objects", bind(&R::generator, &G::min_objects)},
        {"max_objects", bind(&R::generator, &G::max_objects)},
        {"points_per_object", bind(&R::generator, &G::points_per_object)},
        {"floor_points", bind(&R::generator, &G::floor_points)},
        {"frames", bind(&R::generator, &G::frames)},
        {"samples_per_scene", bind(&R::generator, &G::samples_per_scene)},
        {"object_gap", bind(&R::generator, &G::object_gap)},
        {"body_clearance", bind(&R::generator, &G::body_clearance)},
        {"n_train", bind(&R::n_train)},
        {"n_test", bind(&R::n_test)},
        {"latent_dim", bind(&R::model, &M::latent_dim)},
        {"token_dim", bind(&R::model, &M::token_dim)},
        {"layers", bind(&R::model, &M::layers)},
        {"heads", bind(&R::model, &M::heads)},
        {"ffn_dim", bind(&R::model, &M::ffn_dim)},
        {"text_dim", bind(&R::model, &M::text_dim)},
        {"text_tokens", bind(&R::model, &M::text_tokens)},
        {"grid_x", bind(&R::model, &M::grid_x)},
        {"grid_y", bind(&R::model, &M::grid_y)},
        {"grid_z", bind(&R::model, &M::grid_z)},
        {"motion_stride", bind(&R::model, &M::motion_stride)},
        {"max_tokens", bind(&R::model, &M::max_tokens)},
        {"shared_cross_encoder", bind(&R::model, &M::shared_cross_encoder)},
        {"model_seed", bind(&R::model, &M::init_seed)},
        {"batch_size", bind(&R::trainer, &T::batch_size)},
        {"epochs", bind(&R::trainer, &T::epochs)},
        {"learning_rate", bind(&R::trainer, &T::learning_rate)},
        {"weight_decay", bind(&R::trainer, &T::weight_decay)},
        {"trainer_seed", bind(&R::trainer, &T::seed)},
        {"tau", bind(&R::trainer, &T::tau)},
        {"eval_every", bind(&R::trainer, &T::eval_every)},
        {"checkpoint_every", bind(&R::trainer, &T::checkpoint_every)},
        {"kl_weight", bind(&R::trainer, &T::kl_weight)},
        {"protocol", bind(&R::eval, &E::protocol)},
        {"eval_seed", bind(&R::eval, &E::eval_seed)},
        {"eval_batch", bind(&R::eval, &E::eval_batch)},
        {"sweep_steps", bind(&R::eval, &E::sweep_steps)},
        {"sweep_mode", bind(&R::eval, &E::sweep_mode)},
        {"placement_cell", bind(&R::eval, &E::placement_cell)},
        {"placement_samples", bind(&R::eval, &E::placement_samples)},
    };
    f.push_back({"variant", {[](const R& c) { return json(std::string(variant_name(c.trainer.variant))); },
                             [](R& c, const json& j) { c.trainer.variant = parse_variant(j.get<std::string>()); }}});
    return f;
  }();
  return t;
}

template <typename Cfg>
void set_field(const FieldTable<Cfg>& table, Cfg& cfg, const std::string& key, const json& value) {
  for (const auto& [name, field] : table) {
    if (name != key) continue;
    try {
      field.set(cfg, value);
    } catch (const json::exception& e) {
      throw ConfigError("bad value for '" + key + "': " + e.what());
    }
    return;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

template <typename Cfg>
Cfg parse_object(const FieldTable<Cfg>& table, std::string_view text, Cfg cfg) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) set_field(table, cfg, key, value);
  return cfg;
}

template <typename Cfg>
json to_object(const FieldTable<Cfg>& table, const Cfg& cfg) {
  json j = json::object();
  for (const auto& [name, field] : table) j[name] = field.get(cfg);
  return j;
}

}  // namespace

void RunConfig::resolve() {
  model.room_width = generator.room_width;
  model.room_depth = generator.room_depth;
  model.room_height = generator.room_height;
  generator.validate();
  model.validate();
  trainer.validate();
  if (n_train <= 0 || n_test <= 0) throw ConfigError("n_train and n_test must be positive");
  if (eval.protocol != "all" && eval.protocol != "small") throw ConfigError("protocol must be 'all' or 'small'");
  if (eval.sweep_mode != "filtered" && eval.sweep_mode != "unfiltered") {
    throw ConfigError("sweep_mode must be 'filtered' or 'unfiltered'");
  }
  if (eval.sweep_steps < 2) throw ConfigError("sweep_steps must be at least 2");
  if (!(eval.placement_cell > 0)) throw ConfigError("placement_cell must be positive");
  if (eval.eval_batch < 2) throw ConfigError("eval_batch must be at least 2");
}

RunConfig parse_run_config(std::string_view json_text) {
  RunConfig cfg = parse_object(run_fields(), json_text, RunConfig{});
  cfg.resolve();
  return cfg;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(io::read_file(path)); }

void apply_override(RunConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) throw ConfigError("override must look like key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  set_field(run_fields(), cfg, key, value);
  cfg.resolve();
}

std::string run_config_json(const RunConfig& cfg) { return to_object(run_fields(), cfg).dump(2) + "\n"; }

std::vector<std::string> run_config_keys() {
  std::vector<std::string> keys;
  for (const auto& [name, field] : run_fields()) keys.push_back(name);
  return keys;
}

std::string model_config_json(const ModelConfig& cfg) { return to_object(model_fields(), cfg).dump(); }

ModelConfig parse_model_config(std::string_view text) {
  ModelConfig cfg = parse_object(model_fields(), text, ModelConfig{});
  cfg.validate();
  return cfg;
}

std::string trainer_config_json(const TrainerConfig& cfg) { return to_object(trainer_fields(), cfg).dump(); }

TrainerConfig parse_trainer_config(std::string_view text) {
  TrainerConfig cfg = parse_object(trainer_fields(), text, TrainerConfig{});
  cfg.validate();
  return cfg;
}

}  // namespace trimodal
