// trimodal command-line driver: dataset generation, training and evaluation.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trimodal/binary_io.hpp"
#include "trimodal/error.hpp"
#include "trimodal/hsi.hpp"
#include "trimodal/retrieval.hpp"
#include "trimodal/run_config.hpp"
#include "trimodal/store.hpp"
#include "trimodal/trainer.hpp"

namespace fs = std::filesystem;
using namespace trimodal;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
};

RunConfig resolve_config(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  cfg.resolve();
  for (const auto& o : c.overrides) apply_override(cfg, o);
  return cfg;
}

void write_resolved(const fs::path& dir, const RunConfig& cfg) {
  fs::create_directories(dir);
  io::write_file((dir / "resolved_config.json").string(), run_config_json(cfg));
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--override", c.overrides, "key=value, repeatable");
}

int cmd_gen_data(const Common& common, const std::string& out) {
  const RunConfig cfg = resolve_config(common);
  const Dataset data = gen_dataset(cfg.generator, cfg.n_train, cfg.n_test);
  const auto m = save_dataset(out, data, cfg.generator);
  write_resolved(out, cfg);
  std::printf("wrote %zu train / %zu test samples (%zu / %zu scenes) to %s\n", m.n_train, m.n_test, m.train_scenes,
              m.test_scenes, out.c_str());
  return 0;
}

Model<float> load_model(const std::string& ckpt) {
  const Checkpoint c = load_checkpoint(ckpt);
  return Model<float>(c.model, c.params);
}

int cmd_train(const Common& common, const std::string& data_dir, const std::string& out, const std::string& variant,
              const std::string& resume) {
  RunConfig cfg = resolve_config(common);
  if (!variant.empty()) apply_override(cfg, "variant=" + variant);
  const Dataset data = load_dataset(data_dir);
  const fs::path dir(out);
  fs::create_directories(dir);

  std::unique_ptr<Trainer> trainer;
  if (!resume.empty()) {
    Checkpoint c = load_checkpoint(resume);
    c.trainer.epochs = cfg.trainer.epochs;
    c.trainer.eval_every = cfg.trainer.eval_every;
    c.trainer.checkpoint_every = cfg.trainer.checkpoint_every;
    cfg.trainer = c.trainer;
    trainer = std::make_unique<Trainer>(c, data.train);
    std::fprintf(stderr, "resuming at epoch %d, step %lld\n", trainer->epoch(), static_cast<long long>(trainer->steps()));
  } else {
    trainer = std::make_unique<Trainer>(cfg.model, cfg.trainer, data.train);
  }
  write_resolved(dir, cfg);

  std::string eval_log = "epoch,st2m_r1_small,avg_mrecall_small\n";
  trainer->train([&](const Trainer& t) {
    const auto& last = t.trace().back();
    std::fprintf(stderr, "epoch %d  step %lld  loss %.5f\n", t.epoch(), static_cast<long long>(last.step),
                 static_cast<double>(last.total));
    const auto& tc = t.config();
    if (tc.checkpoint_every > 0 && t.epoch() % tc.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "checkpoint_epoch%03d.tmrc", t.epoch());
      save_checkpoint((dir / name).string(), t.checkpoint());
    }
    if (tc.eval_every > 0 && t.epoch() % tc.eval_every == 0 &&
        data.test.size() >= static_cast<std::size_t>(cfg.eval.eval_batch)) {
      const auto store = embed_corpus(t.model(), data.test);
      const auto report = evaluate_all(store, Protocol::small_batches(cfg.eval.eval_seed, cfg.eval.eval_batch));
      char line[96];
      std::snprintf(line, sizeof line, "%d,%.4f,%.4f\n", t.epoch(), report.task("st2m").recall[0], report.average_mrecall());
      eval_log += line;
      std::fprintf(stderr, "  st2m R@1 %.2f  avg mRecall %.2f\n", report.task("st2m").recall[0], report.average_mrecall());
    }
  });
  save_checkpoint((dir / "checkpoint.tmrc").string(), trainer->checkpoint());
  io::write_file((dir / "loss.csv").string(), loss_trace_csv(trainer->trace(), trainer->terms()));
  if (cfg.trainer.eval_every > 0) io::write_file((dir / "eval.csv").string(), eval_log);
  std::printf("trained %d epochs, %lld steps; checkpoint at %s\n", trainer->epoch(),
              static_cast<long long>(trainer->steps()), (dir / "checkpoint.tmrc").c_str());
  return 0;
}

int cmd_eval_retrieval(const Common& common, const std::string& ckpt, const std::string& data_dir,
                       const std::string& protocol_name, const std::string& out, const std::string& emb_path) {
  RunConfig cfg = resolve_config(common);
  if (!protocol_name.empty()) apply_override(cfg, "protocol=\"" + protocol_name + "\"");
  const Model<float> model = load_model(ckpt);
  const Dataset data = load_dataset(data_dir);
  const EmbeddingStore store = embed_corpus(model, data.test);
  if (!emb_path.empty()) save_embeddings(emb_path, store);
  Protocol protocol = parse_protocol(cfg.eval.protocol, cfg.eval.eval_seed);
  protocol.batch_size = cfg.eval.eval_batch;
  const RetrievalReport report = evaluate_all(store, protocol);
  const std::string csv = report.to_csv();
  if (out.empty()) {
    std::cout << csv;
  } else {
    io::write_file(out, csv);
    write_resolved(fs::path(out).parent_path().empty() ? fs::path(".") : fs::path(out).parent_path(), cfg);
  }
  std::fprintf(stderr, "protocol %s: %d pool(s) of %zu\n", std::string(protocol.name()).c_str(), report.tasks.front().pools,
               report.pool_size);
  return 0;
}

int cmd_eval_hsi(const Common& common, const std::string& ckpt, const std::string& data_dir, bool sweep, bool place,
                 const std::string& mode_name, const std::string& out, const std::string& gnuplot) {
  RunConfig cfg = resolve_config(common);
  if (!mode_name.empty()) apply_override(cfg, "sweep_mode=\"" + mode_name + "\"");
  if (sweep == place) throw ConfigError("choose exactly one of --sweep or --place");
  const Model<float> model = load_model(ckpt);
  const Dataset data = load_dataset(data_dir);
  const fs::path dir(out);
  write_resolved(dir, cfg);

  if (sweep) {
    const auto mode = parse_sweep_mode(cfg.eval.sweep_mode);
    const auto result = rotation_sweep(model, data.test, sweep_angles(cfg.eval.sweep_steps), mode,
                                       {cfg.eval.eval_batch, cfg.eval.eval_seed});
    const std::string name = "sweep_" + sweep_mode_name(mode) + ".csv";
    io::write_file((dir / name).string(), result.to_csv());
    if (!gnuplot.empty()) io::write_file(gnuplot, result.to_gnuplot());
    const double baseline = fid_split_baseline(model, data.test, cfg.eval.eval_seed);
    std::printf("wrote %s (%zu angles); self-split FID baseline %.6f\n", (dir / name).c_str(), result.rows.size(), baseline);
    return 0;
  }

  const std::size_t n = std::min(data.test.size(), static_cast<std::size_t>(cfg.eval.placement_samples));
  std::vector<PlacementResult> results;
  for (std::size_t i = 0; i < n; ++i) {
    results.push_back(place_object_grid(data.test[i], cfg.eval.placement_cell, model_placement_scorer(model, data.test[i])));
    if (results.back().rejected > 0) {
      std::fprintf(stderr, "warning: %s: %d offsets leave the room and were skipped\n", data.test[i].id.c_str(),
                   results.back().rejected);
    }
  }
  io::write_file((dir / "placement.csv").string(), placement_csv(results));
  double mean = 0.0;
  for (const auto& r : results) mean += r.error_cm;
  mean /= static_cast<double>(results.size());
  std::printf("mean placement error over %zu samples: %.2f cm\n", results.size(), mean);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trimodal: text/motion/scene contrastive retrieval and evaluation"};
  app.require_subcommand(1);

  Common common;
  std::string out, data_dir, variant, resume, ckpt, protocol, save_emb, mode, gnuplot;
  std::string hsi_out = ".";
  bool sweep = false, place = false;

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset");
  add_common(gen, common);
  gen->add_option("--out", out, "output directory")->required();

  auto* train = app.add_subcommand("train", "train a model");
  add_common(train, common);
  train->add_option("--data", data_dir, "dataset directory")->required();
  train->add_option("--out", out, "output directory")->required();
  train->add_option("--variant", variant, "full | without_cross_modal | without_single");
  train->add_option("--resume", resume, "checkpoint to resume from")->check(CLI::ExistingFile);

  auto* ret = app.add_subcommand("eval-retrieval", "evaluate the twelve retrieval tasks");
  add_common(ret, common);
  ret->add_option("--ckpt", ckpt, "checkpoint")->required()->check(CLI::ExistingFile);
  ret->add_option("--data", data_dir, "dataset directory")->required();
  ret->add_option("--protocol", protocol, "all | small");
  ret->add_option("--out", out, "CSV path (default stdout)");
  ret->add_option("--save-embeddings", save_emb, "write the test embedding store");

  auto* hsi = app.add_subcommand("eval-hsi", "rotation sweep or object placement");
  add_common(hsi, common);
  hsi->add_option("--ckpt", ckpt, "checkpoint")->required()->check(CLI::ExistingFile);
  hsi->add_option("--data", data_dir, "dataset directory")->required();
  hsi->add_flag("--sweep", sweep, "rotation sweep");
  hsi->add_flag("--place", place, "grid-search object placement");
  hsi->add_option("--mode", mode, "filtered | unfiltered");
  hsi->add_option("--out", hsi_out, "output directory")->capture_default_str();
  hsi->add_option("--gnuplot", gnuplot, "also write whitespace-separated sweep columns here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen_data(common, out);
    if (*train) return cmd_train(common, data_dir, out, variant, resume);
    if (*ret) return cmd_eval_retrieval(common, ckpt, data_dir, protocol, out, save_emb);
    if (*hsi) return cmd_eval_hsi(common, ckpt, data_dir, sweep, place, mode, hsi_out, gnuplot);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
