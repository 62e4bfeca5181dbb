#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "trimodal/model.hpp"
#include "trimodal/synthgen.hpp"
#include "trimodal/trainer.hpp"

namespace trimodal {

struct EvalConfig {
  std::string protocol = "small";
  std::uint64_t eval_seed = 0;
  int eval_batch = 32;
  int sweep_steps = 9;
  std::string sweep_mode = "filtered";
  double placement_cell = 0.25;
  int placement_samples = 64;
};

struct RunConfig {
  GeneratorConfig generator;
  int n_train = 2000;
  int n_test = 256;
  ModelConfig model;
  TrainerConfig trainer;
  EvalConfig eval;

  // Copies the generator's room extent into the model and validates all parts.
  void resolve();
};

// Flat JSON object; unknown keys are rejected.
[[nodiscard]] RunConfig parse_run_config(std::string_view json_text);
[[nodiscard]] RunConfig load_run_config(const std::string& path);
// "key=value", value parsed as JSON when possible, else as a string.
void apply_override(RunConfig& cfg, std::string_view assignment);
[[nodiscard]] std::string run_config_json(const RunConfig& cfg);
[[nodiscard]] std::vector<std::string> run_config_keys();

// Compact JSON for the parts stored inside checkpoints.
[[nodiscard]] std::string model_config_json(const ModelConfig& cfg);
[[nodiscard]] ModelConfig parse_model_config(std::string_view json_text);
[[nodiscard]] std::string trainer_config_json(const TrainerConfig& cfg);
[[nodiscard]] TrainerConfig parse_trainer_config(std::string_view json_text);

}  // namespace trimodal
