#include "trimodal/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "trimodal/binary_io.hpp"
#include "trimodal/error.hpp"
#include "trimodal/run_config.hpp"

namespace trimodal {

void TrainerConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0)) throw ConfigError("adam_eps must be positive");
  if (weight_decay < 0) throw ConfigError("weight_decay must be non-negative");
  if (!(tau > 0)) throw ConfigError("tau must be positive");
  if (eval_every < 0 || checkpoint_every < 0) throw ConfigError("eval_every and checkpoint_every must be non-negative");
  if (kl_weight < 0) throw ConfigError("kl_weight must be non-negative");
}

ModelConfig model_config_for(const ModelConfig& cfg, Variant v) {
  ModelConfig out = cfg;
  if (v == Variant::WithoutCrossModal) out.cross_modal = false;
  return out;
}

// Adam

Adam::Adam(const nn::ParameterSet<float>& params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    m.push_back(nn::Matrix<double>::Zero(params[i].rows(), params[i].cols()));
    v.push_back(nn::Matrix<double>::Zero(params[i].rows(), params[i].cols()));
  }
}

void Adam::step(nn::ParameterSet<float>& params, const nn::Gradients<float>& grads, const TrainerConfig& cfg) {
  ++t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const auto& g = grads[i];
    auto& mi = m[i];
    auto& vi = v[i];
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double gk = g.data()[k];
      mi.data()[k] = cfg.beta1 * mi.data()[k] + (1.0 - cfg.beta1) * gk;
      vi.data()[k] = cfg.beta2 * vi.data()[k] + (1.0 - cfg.beta2) * gk * gk;
      const double update = (mi.data()[k] / c1) / (std::sqrt(vi.data()[k] / c2) + cfg.adam_eps);
      const double pk = p.data()[k];
      p.data()[k] = static_cast<float>(pk - cfg.learning_rate * (update + cfg.weight_decay * pk));
    }
  }
}

// Checkpoint format

std::string encode_checkpoint(const Checkpoint& c) {
  std::ostringstream ss(std::ios::binary);
  io::Writer w(ss);
  w.magic("TMRC");
  w.u16(kCheckpointFormatVersion);
  w.str(model_config_json(c.model));
  w.str(trainer_config_json(c.trainer));
  w.u32(static_cast<std::uint32_t>(c.epoch));
  w.i64(c.step);
  w.str(c.rng_state);
  w.u32(static_cast<std::uint32_t>(c.params.size()));
  for (std::size_t i = 0; i < c.params.size(); ++i) {
    const auto& p = c.params[i];
    w.str(c.params.name(i));
    w.u32(static_cast<std::uint32_t>(p.rows()));
    w.u32(static_cast<std::uint32_t>(p.cols()));
    for (Eigen::Index k = 0; k < p.size(); ++k) w.f32(p.data()[k]);
  }
  const bool has_adam = c.adam.m.size() == c.params.size() && c.adam.v.size() == c.params.size();
  w.u8(has_adam ? 1 : 0);
  if (has_adam) {
    w.i64(c.adam.t);
    for (std::size_t i = 0; i < c.params.size(); ++i) {
      for (Eigen::Index k = 0; k < c.adam.m[i].size(); ++k) w.f64(c.adam.m[i].data()[k]);
      for (Eigen::Index k = 0; k < c.adam.v[i].size(); ++k) w.f64(c.adam.v[i].data()[k]);
    }
  }
  w.u64(c.trace.size());
  for (const auto& r : c.trace) {
    w.i64(r.step);
    w.u32(static_cast<std::uint32_t>(r.epoch));
    w.f32(r.total);
    w.u32(static_cast<std::uint32_t>(r.per_pair.size()));
    for (float v : r.per_pair) w.f32(v);
  }
  return ss.str();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  std::istringstream ss(bytes, std::ios::binary);
  io::Reader r(ss, "checkpoint");
  r.expect_magic("TMRC");
  const auto version = r.u16();
  if (version != kCheckpointFormatVersion) r.fail("unsupported version " + std::to_string(version));
  Checkpoint c;
  try {
    c.model = parse_model_config(r.str());
    c.trainer = parse_trainer_config(r.str());
  } catch (const ConfigError& e) {
    r.fail(std::string("embedded config invalid: ") + e.what());
  }
  c.epoch = static_cast<int>(r.u32());
  c.step = r.i64();
  c.rng_state = r.str();
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str(4096);
    const auto rows = r.u32();
    const auto cols = r.u32();
    if (static_cast<std::uint64_t>(rows) * cols > (1ull << 28)) r.fail("implausible parameter shape");
    nn::Matrix<float> p(rows, cols);
    for (Eigen::Index k = 0; k < p.size(); ++k) p.data()[k] = r.f32();
    c.params.add(std::move(name), std::move(p));
  }
  if (r.u8() != 0) {
    c.adam.t = r.i64();
    for (std::uint32_t i = 0; i < count; ++i) {
      nn::Matrix<double> m(c.params[i].rows(), c.params[i].cols());
      nn::Matrix<double> v(c.params[i].rows(), c.params[i].cols());
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = r.f64();
      for (Eigen::Index k = 0; k < v.size(); ++k) v.data()[k] = r.f64();
      c.adam.m.push_back(std::move(m));
      c.adam.v.push_back(std::move(v));
    }
  }
  const auto records = r.u64();
  if (records > (1ull << 32)) r.fail("implausible trace length");
  for (std::uint64_t i = 0; i < records; ++i) {
    LossRecord rec;
    rec.step = r.i64();
    rec.epoch = static_cast<int>(r.u32());
    rec.total = r.f32();
    const auto n = r.u32();
    if (n > 64) r.fail("implausible pair count");
    for (std::uint32_t k = 0; k < n; ++k) rec.per_pair.push_back(r.f32());
    c.trace.push_back(std::move(rec));
  }
  r.expect_end();
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) { io::write_file(path, encode_checkpoint(c)); }

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(io::read_file(path)); }

// Trainer

namespace {

std::vector<PreparedInputs> prepare_all(const std::vector<TrimodalSample>& data, const ModelConfig& cfg) {
  std::vector<PreparedInputs> out;
  out.reserve(data.size());
  for (const auto& s : data) out.push_back(prepare_inputs(s, cfg));
  return out;
}

}  // namespace

Trainer::Trainer(const ModelConfig& model_cfg, const TrainerConfig& cfg, const std::vector<TrimodalSample>& data)
    : cfg_(cfg),
      terms_(build_term_set(cfg.variant)),
      model_(model_config_for(model_cfg, cfg.variant)),
      adam_(model_.params()),
      rng_(cfg.seed) {
  cfg_.validate();
  if (data.size() < static_cast<std::size_t>(cfg_.batch_size)) {
    throw ConfigError("dataset has " + std::to_string(data.size()) + " samples, fewer than batch_size " +
                      std::to_string(cfg_.batch_size));
  }
  inputs_ = prepare_all(data, model_.config());
}

Trainer::Trainer(const Checkpoint& ckpt, const std::vector<TrimodalSample>& data)
    : cfg_(ckpt.trainer),
      terms_(build_term_set(ckpt.trainer.variant)),
      model_(ckpt.model, ckpt.params),
      adam_(ckpt.adam),
      epoch_(ckpt.epoch),
      step_(ckpt.step),
      trace_(ckpt.trace) {
  cfg_.validate();
  if (adam_.m.size() != model_.params().size()) adam_ = Adam(model_.params());
  rng_.deserialize(ckpt.rng_state);
  if (data.size() < static_cast<std::size_t>(cfg_.batch_size)) throw ConfigError("dataset smaller than batch_size");
  inputs_ = prepare_all(data, model_.config());
}

double Trainer::step(const std::vector<std::size_t>& batch) {
  const int d = model_.config().latent_dim;
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (n < 2) throw ConfigError("a training step needs at least two samples");

  std::vector<ForwardCache<float>> caches(batch.size());
  LatentBatch latents;
  for (auto& l : latents) l.resize(n, d);
  for (Eigen::Index b = 0; b < n; ++b) {
    nn::Matrix<float> noise(kNumSources, d);
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = static_cast<float>(rng_.normal());
    const auto out = model_.forward(inputs_.at(batch[static_cast<std::size_t>(b)]), &noise, &caches[static_cast<std::size_t>(b)]);
    for (int s = 0; s < kNumSources; ++s) latents[s].row(b) = out.z.row(s).cast<double>();
  }
  // Sources the term set never touches stay out of the loss.
  LatentBatch used;
  for (int s = 0; s < kNumSources; ++s) {
    if (terms_.uses(kAllSources[s])) used[s] = latents[s];
  }
  LatentBatch grads;
  const LossBreakdown loss = total_loss(used, terms_, cfg_.tau, &grads);
  double total = loss.total;

  const int active = model_.config().cross_modal ? kNumSources : 3;
  std::vector<nn::Matrix<float>> dmu(batch.size()), dlv(batch.size());
  if (cfg_.kl_weight > 0) {
    const double w = cfg_.kl_weight / static_cast<double>(n);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto& out = caches[b].out;
      dmu[b] = nn::Matrix<float>::Zero(kNumSources, d);
      dlv[b] = nn::Matrix<float>::Zero(kNumSources, d);
      for (int s = 0; s < active; ++s) {
        for (int k = 0; k < d; ++k) {
          const double mu = out.mu(s, k);
          const double lv = out.logvar(s, k);
          total += w * 0.5 * (std::exp(lv) + mu * mu - 1.0 - lv);
          dmu[b](s, k) = static_cast<float>(w * mu);
          dlv[b](s, k) = static_cast<float>(w * 0.5 * (std::exp(lv) - 1.0));
        }
      }
    }
  }
  if (!std::isfinite(total)) throw NumericError("non-finite loss at step " + std::to_string(step_));

  nn::Gradients<float> g(model_.params());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    nn::Matrix<float> dz = nn::Matrix<float>::Zero(kNumSources, d);
    for (int s = 0; s < kNumSources; ++s) {
      if (grads[s].size() > 0) dz.row(s) = grads[s].row(static_cast<Eigen::Index>(b)).cast<float>();
    }
    model_.backward(caches[b], dz, dmu[b], dlv[b], g);
  }
  adam_.step(model_.params(), g, cfg_);

  LossRecord rec;
  rec.step = step_;
  rec.epoch = epoch_;
  rec.total = static_cast<float>(total);
  for (double v : loss.per_pair) rec.per_pair.push_back(static_cast<float>(v));
  trace_.push_back(std::move(rec));
  ++step_;
  return total;
}

void Trainer::run_epoch() {
  std::vector<std::size_t> order(inputs_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng_.shuffle(order);
  const auto bs = static_cast<std::size_t>(cfg_.batch_size);
  for (std::size_t start = 0; start + bs <= order.size(); start += bs) {
    step(std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(start),
                                  order.begin() + static_cast<std::ptrdiff_t>(start + bs)));
  }
  ++epoch_;
}

void Trainer::train(const std::function<void(const Trainer&)>& after_epoch) {
  while (epoch_ < cfg_.epochs) {
    run_epoch();
    if (after_epoch) after_epoch(*this);
  }
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.model = model_.config();
  c.trainer = cfg_;
  c.epoch = epoch_;
  c.step = step_;
  c.rng_state = rng_.serialize();
  c.params = model_.params();
  c.adam = adam_;
  c.trace = trace_;
  return c;
}

std::string loss_trace_csv(const std::vector<LossRecord>& trace, const TermSet& terms) {
  std::string out = "step,epoch,L_tot";
  for (const auto& p : terms.pairs) out += "," + std::string(source_name(p.i)) + "-" + std::string(source_name(p.j));
  out += "\n";
  char buf[48];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%lld,%d,%.9g", static_cast<long long>(r.step), r.epoch, static_cast<double>(r.total));
    out += buf;
    for (float v : r.per_pair) {
      std::snprintf(buf, sizeof buf, ",%.9g", static_cast<double>(v));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace trimodal
