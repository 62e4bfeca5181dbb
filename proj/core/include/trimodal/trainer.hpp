#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "trimodal/contrastive.hpp"
#include "trimodal/model.hpp"

namespace trimodal {

struct TrainerConfig {
  int batch_size = 32;
  int epochs = 40;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;  // decoupled
  std::uint64_t seed = 0;
  double tau = 0.1;
  Variant variant = Variant::Full;
  int eval_every = 0;          // epochs, 0 disables
  int checkpoint_every = 0;    // epochs, 0 disables
  double kl_weight = 0.0;

  void validate() const;
};

// Model configuration actually trained for a variant: without_cross_modal
// has no cross-modal encoders.
[[nodiscard]] ModelConfig model_config_for(const ModelConfig& cfg, Variant v);

struct LossRecord {
  std::int64_t step = 0;
  int epoch = 0;
  float total = 0.0f;
  std::vector<float> per_pair;

  bool operator==(const LossRecord&) const = default;
};

class Adam {
 public:
  Adam() = default;
  explicit Adam(const nn::ParameterSet<float>& params);

  void step(nn::ParameterSet<float>& params, const nn::Gradients<float>& grads, const TrainerConfig& cfg);

  std::int64_t t = 0;
  std::vector<nn::Matrix<double>> m;
  std::vector<nn::Matrix<double>> v;
};

struct Checkpoint {
  ModelConfig model;
  TrainerConfig trainer;
  int epoch = 0;          // completed epochs
  std::int64_t step = 0;  // completed optimizer steps
  std::string rng_state;
  nn::ParameterSet<float> params;
  Adam adam;
  std::vector<LossRecord> trace;
};

inline constexpr std::uint16_t kCheckpointFormatVersion = 1;

[[nodiscard]] std::string encode_checkpoint(const Checkpoint& c);
[[nodiscard]] Checkpoint decode_checkpoint(const std::string& bytes);
void save_checkpoint(const std::string& path, const Checkpoint& c);
[[nodiscard]] Checkpoint load_checkpoint(const std::string& path);

class Trainer {
 public:
  Trainer(const ModelConfig& model_cfg, const TrainerConfig& cfg, const std::vector<TrimodalSample>& data);
  // Resumes from a checkpoint; the data must be the set it was trained on.
  Trainer(const Checkpoint& ckpt, const std::vector<TrimodalSample>& data);

  // One optimizer step over the given sample indices; returns L_tot.
  double step(const std::vector<std::size_t>& batch);
  void run_epoch();
  // Runs until cfg.epochs; the callback fires after every epoch.
  void train(const std::function<void(const Trainer&)>& after_epoch = {});

  [[nodiscard]] int epoch() const { return epoch_; }
  [[nodiscard]] std::int64_t steps() const { return step_; }
  [[nodiscard]] const std::vector<LossRecord>& trace() const { return trace_; }
  [[nodiscard]] const Model<float>& model() const { return model_; }
  [[nodiscard]] const TrainerConfig& config() const { return cfg_; }
  [[nodiscard]] const TermSet& terms() const { return terms_; }
  [[nodiscard]] Checkpoint checkpoint() const;

 private:
  TrainerConfig cfg_;
  TermSet terms_;
  Model<float> model_;
  Adam adam_;
  Rng rng_;
  int epoch_ = 0;
  std::int64_t step_ = 0;
  std::vector<LossRecord> trace_;
  std::vector<PreparedInputs> inputs_;
};

// step,epoch,L_tot then one column per term pair.
[[nodiscard]] std::string loss_trace_csv(const std::vector<LossRecord>& trace, const TermSet& terms);

}  // namespace trimodal
