// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--cache DIR] [--seeds N] [--only 1,2,...]
//
// Criteria 6-9 train the default model on the default dataset for each seed
// and variant. Checkpoints are cached under DIR and reused only when the
// regenerated dataset and the resolved training config match byte for byte.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "test_support.hpp"
#include "trimodal/binary_io.hpp"
#include "trimodal/contrastive.hpp"
#include "trimodal/error.hpp"
#include "trimodal/hsi.hpp"
#include "trimodal/random.hpp"
#include "trimodal/retrieval.hpp"
#include "trimodal/run_config.hpp"
#include "trimodal/store.hpp"
#include "trimodal/trainer.hpp"

using namespace trimodal;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1

Outcome loss_oracle() {
  const auto t0 = Clock::now();
  const double nce = info_nce(Eigen::MatrixXd::Identity(2, 2), 1.0);
  LatentBatch b;
  b[source_index(Source::T)] = Eigen::MatrixXd::Identity(2, 2);
  b[source_index(Source::S)] = Eigen::MatrixXd::Identity(2, 2);
  const double tot = total_loss(b, TermSet::make({{Source::T, Source::S}}, Variant::Full), 1.0).total;
  double worst_uniform = 0.0;
  for (int n : {2, 3, 8, 32, 64}) {
    const double per_sample = info_nce(Eigen::MatrixXd::Constant(n, n, 0.25), 0.1) / n;
    worst_uniform = std::max(worst_uniform, std::abs(per_sample - std::log(double(n))));
    LatentBatch u;
    for (auto& m : u) m = Eigen::MatrixXd::Ones(n, 4);
    worst_uniform = std::max(worst_uniform, std::abs(total_loss(u, build_term_set(Variant::Full), 0.1).total - std::log(double(n))));
  }
  const double secs = seconds_since(t0);
  const bool ok = std::abs(nce - 0.62652338) <= 1e-7 && std::abs(tot - 0.31326169) <= 1e-7 && worst_uniform <= 1e-9 &&
                  secs < 1.0;
  return {ok, fmt("InfoNCE(I2)=%.9f L_tot=%.9f uniform |err|=%.1e, %.3fs", nce, tot, worst_uniform, secs)};
}

// 2

Outcome gradient_check() {
  const auto t0 = Clock::now();
  const auto r = fixtures::gradient_check(fixtures::tiny_model_config(), fixtures::tiny_samples(2), Variant::Full, 0.1);
  const double secs = seconds_since(t0);
  return {r.max_rel_error <= 1e-3 && r.global_rel_error <= 1e-3 && secs < 60.0,
          fmt("max rel err %.2e (worst %s), overall %.2e, %zu scalars, %.1fs", r.max_rel_error, r.worst_param.c_str(), r.global_rel_error, r.checked, secs)};
}

// 3

Outcome retrieval_oracle() {
  const auto t0 = Clock::now();
  std::size_t compared = 0;
  std::size_t mismatched = 0;
  for (int n : {2, 5, 8}) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      Rng rng(1000 * n + seed);
      EmbeddingStore store(3);
      for (int i = 0; i < n; ++i) {
        for (Source s : kAllSources) {
          std::vector<float> v(3);
          // Coarse values produce exact ties now and then.
          for (auto& x : v) x = static_cast<float>(static_cast<int>(rng.below(5)) - 2) + (rng.uniform() < 0.5 ? 0.5f : 0.0f);
          if (v[0] == 0 && v[1] == 0 && v[2] == 0) v[0] = 1;
          store.add(fmt("q%02d", (i * 7) % n), s, v);
        }
      }
      std::vector<Protocol> protocols = {Protocol::all(), Protocol::small_batches(seed, 2)};
      if (n >= 4) protocols.push_back(Protocol::small_batches(seed, 4));
      for (const auto& p : protocols) {
        const auto pools = protocol_pools(p, store.size());
        for (const auto& task : retrieval_tasks()) {
          const auto res = evaluate_task(task, p, store);
          std::vector<int> expect;
          for (const auto& pool : pools) {
            const auto r = fixtures::oracle_ranks(store, task.query, task.target, pool);
            expect.insert(expect.end(), r.begin(), r.end());
          }
          ++compared;
          if (res.ranks != expect) ++mismatched;
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return {mismatched == 0 && secs < 10.0, fmt("%zu task/protocol/pool sets, %zu mismatches, %.2fs", compared, mismatched, secs)};
}

// 4

Outcome fid_oracle() {
  GaussianMoments a, b;
  a.mean = Eigen::VectorXd::Constant(1, 0.0);
  a.covariance = Eigen::MatrixXd::Constant(1, 1, 1.0);
  b.mean = Eigen::VectorXd::Constant(1, 1.0);
  b.covariance = Eigen::MatrixXd::Constant(1, 1, 4.0);
  const double one_d = frechet_distance(a, b);
  const double closed = fixtures::frechet_1d(0, 1, 1, 2);

  GaussianMoments c, d;
  c.mean = d.mean = Eigen::VectorXd::Zero(2);
  c.covariance = Eigen::Vector2d(1, 1).asDiagonal();
  d.covariance = Eigen::Vector2d(4, 9).asDiagonal();
  const double diag = frechet_distance(c, d);

  Rng rng(64);
  Eigen::MatrixXd x(64, 32);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const auto gx = fit_gaussian(x);
  const double self = frechet_distance(gx, gx);

  const bool ok = std::abs(one_d - 2.0) <= 1e-6 && std::abs(closed - 2.0) <= 1e-12 && std::abs(diag - 5.0) <= 1e-6 &&
                  std::abs(self) <= 1e-6;
  return {ok, fmt("1-D %.9f, diagonal %.9f, FID(X,X) %.2e", one_d, diag, self)};
}

// 5

Outcome lattice_check() {
  const auto offs = placement_offsets(0.25);
  const auto brute = fixtures::brute_force_lattice(0.25);
  std::set<std::tuple<double, double, double>> a, b;
  for (const auto& o : offs) a.emplace(o.x(), o.y(), o.z());
  for (const auto& o : brute) b.emplace(o.x(), o.y(), o.z());
  double mean = 0, max = 0;
  for (const auto& o : brute) {
    mean += 100.0 * o.norm();
    max = std::max(max, 100.0 * o.norm());
  }
  mean /= static_cast<double>(brute.size());
  const bool ok = offs.size() == 125 && a == b && std::abs(max - 86.60) <= 0.01 && std::abs(mean - 58.98) <= 0.01;
  return {ok, fmt("%zu offsets, max %.4f cm, mean %.4f cm", offs.size(), max, mean)};
}

// 6-9

struct SeedRun {
  Model<float> model;
  RetrievalReport small;
};

class TrainedModels {
 public:
  TrainedModels(fs::path cache, int seeds) : cache_(std::move(cache)), seeds_(seeds) {}

  const Dataset& data() {
    if (!loaded_) prepare_data();
    return data_;
  }

  const SeedRun& run(int seed, Variant v) {
    const std::string key = fmt("seed%d_%s", seed, std::string(variant_name(v)).c_str());
    auto it = runs_.find(key);
    if (it != runs_.end()) return it->second;

    RunConfig cfg;
    cfg.resolve();
    apply_override(cfg, fmt("model_seed=%d", seed));
    apply_override(cfg, fmt("trainer_seed=%d", seed));
    apply_override(cfg, "variant=\"" + std::string(variant_name(v)) + "\"");
    const std::string resolved = run_config_json(cfg);

    const fs::path dir = cache_ / key;
    const fs::path ckpt = dir / "checkpoint.tmrc";
    const fs::path cfg_path = dir / "resolved_config.json";
    const auto& ds = data();
    bool cached = !stale_ && fs::exists(ckpt) && fs::exists(cfg_path) && io::read_file(cfg_path.string()) == resolved;
    if (!cached) {
      std::fprintf(stderr, "[acceptance] training %s (%d epochs)\n", key.c_str(), cfg.trainer.epochs);
      const auto t0 = Clock::now();
      Trainer trainer(cfg.model, cfg.trainer, ds.train);
      trainer.train([&](const Trainer& t) {
        std::fprintf(stderr, "[acceptance]   %s epoch %d loss %.4f\n", key.c_str(), t.epoch(),
                     static_cast<double>(t.trace().back().total));
      });
      fs::create_directories(dir);
      save_checkpoint(ckpt.string(), trainer.checkpoint());
      io::write_file((dir / "loss.csv").string(), loss_trace_csv(trainer.trace(), trainer.terms()));
      io::write_file(cfg_path.string(), resolved);
      std::fprintf(stderr, "[acceptance] %s trained in %.0fs\n", key.c_str(), seconds_since(t0));
      train_seconds_ = std::max(train_seconds_, seconds_since(t0));
    }
    const Checkpoint c = load_checkpoint(ckpt.string());
    Model<float> model(c.model, c.params);
    auto report = evaluate_all(embed_corpus(model, ds.test), Protocol::small_batches(cfg.eval.eval_seed, cfg.eval.eval_batch));
    io::write_file((dir / "retrieval_small.csv").string(), report.to_csv());
    return runs_.emplace(key, SeedRun{std::move(model), std::move(report)}).first->second;
  }

  [[nodiscard]] int seeds() const { return seeds_; }
  [[nodiscard]] const fs::path& cache() const { return cache_; }
  [[nodiscard]] double longest_training_seconds() const { return train_seconds_; }

 private:
  void prepare_data() {
    RunConfig cfg;
    cfg.resolve();
    data_ = gen_dataset(cfg.generator, cfg.n_train, cfg.n_test);
    const std::string train = encode_samples(data_.train);
    const std::string test = encode_samples(data_.test);
    fs::create_directories(cache_);
    const fs::path tp = cache_ / "data" / "train.tmrd";
    stale_ = !fs::exists(tp) || io::read_file(tp.string()) != train ||
             io::read_file((cache_ / "data" / "test.tmrd").string()) != test;
    if (stale_) save_dataset((cache_ / "data").string(), data_, cfg.generator);
    loaded_ = true;
  }

  fs::path cache_;
  int seeds_;
  Dataset data_;
  bool loaded_ = false;
  bool stale_ = false;
  double train_seconds_ = 0.0;
  std::map<std::string, SeedRun> runs_;
};

Outcome learnability(TrainedModels& tm) {
  double sum = 0;
  std::string per;
  for (int s = 0; s < tm.seeds(); ++s) {
    const double r1 = tm.run(s, Variant::Full).small.task("st2m").recall[0];
    sum += r1;
    per += fmt("%s%.2f", s ? "/" : "", r1);
  }
  const double mean = sum / tm.seeds();
  const double minutes = tm.longest_training_seconds() / 60.0;
  std::string timing = tm.longest_training_seconds() > 0 ? fmt(", slowest run %.1f min", minutes) : ", cached checkpoints";
  return {mean >= 10.0 && minutes <= 30.0,
          fmt("st2m R@1 small = %.2f%% (seeds %s) vs >= 10%%", mean, per.c_str()) + timing};
}

Outcome ablation(TrainedModels& tm) {
  double full = 0, nocross = 0;
  for (int s = 0; s < tm.seeds(); ++s) {
    full += tm.run(s, Variant::Full).small.task("st2m").mrecall;
    nocross += tm.run(s, Variant::WithoutCrossModal).small.task("st2m").mrecall;
  }
  full /= tm.seeds();
  nocross /= tm.seeds();
  return {full > nocross, fmt("st2m mRecall small: full %.2f vs without_cross_modal %.2f", full, nocross)};
}

Outcome rotation(TrainedModels& tm) {
  RunConfig cfg;
  cfg.resolve();
  const auto angles = sweep_angles(cfg.eval.sweep_steps);
  const SweepOptions opts{cfg.eval.eval_batch, cfg.eval.eval_seed};
  double rho_sum = 0, fid_pi = 0, baseline = 0, unfiltered = 0, filtered = 0;
  std::string per;
  for (int s = 0; s < tm.seeds(); ++s) {
    const auto& model = tm.run(s, Variant::Full).model;
    const auto& test = tm.data().test;
    const auto f = rotation_sweep(model, test, angles, SweepMode::Filtered, opts);
    const auto u = rotation_sweep(model, test, angles, SweepMode::Unfiltered, opts);
    const fs::path dir = tm.cache() / fmt("seed%d_full", s);
    io::write_file((dir / "sweep_filtered.csv").string(), f.to_csv());
    io::write_file((dir / "sweep_unfiltered.csv").string(), u.to_csv());

    std::vector<double> th, r1;
    for (const auto& row : f.rows) {
      if (row.skipped) continue;
      th.push_back(row.theta);
      r1.push_back(row.recall1);
    }
    const double rho = spearman(th, r1);
    rho_sum += rho;
    per += fmt("%s%.3f", s ? "/" : "", rho);
    fid_pi += f.rows.back().skipped ? u.rows.back().fid : f.rows.back().fid;
    baseline += fid_split_baseline(model, test, cfg.eval.eval_seed);
    for (std::size_t i = 0; i < angles.size(); ++i) {
      if (f.rows[i].skipped || u.rows[i].skipped) continue;
      unfiltered += u.rows[i].fid;
      filtered += f.rows[i].fid;
    }
  }
  const double n = tm.seeds();
  const double rho = rho_sum / n;
  const double ratio = fid_pi / baseline;
  const bool ok = rho <= -0.8 && ratio >= 2.0 && unfiltered >= filtered;
  return {ok, fmt("Spearman(theta, R@1) = %.3f (seeds %s) vs <= -0.8; FID(pi) = %.4f = %.1fx split baseline %.4f vs >= 2x; "
                  "mean FID unfiltered %.4f vs filtered %.4f",
                  rho, per.c_str(), fid_pi / n, ratio, baseline / n, unfiltered / (n * angles.size()),
                  filtered / (n * angles.size()))};
}

Outcome placement(TrainedModels& tm) {
  RunConfig cfg;
  cfg.resolve();
  const double chance = 58.98;
  double sum = 0;
  std::string per;
  for (int s = 0; s < tm.seeds(); ++s) {
    const auto& model = tm.run(s, Variant::Full).model;
    const auto& test = tm.data().test;
    const std::size_t n = std::min<std::size_t>(test.size(), static_cast<std::size_t>(cfg.eval.placement_samples));
    std::vector<PlacementResult> results;
    double err = 0;
    for (std::size_t i = 0; i < n; ++i) {
      results.push_back(place_object_grid(test[i], cfg.eval.placement_cell, model_placement_scorer(model, test[i])));
      err += results.back().error_cm;
    }
    err /= static_cast<double>(n);
    io::write_file((tm.cache() / fmt("seed%d_full", s) / "placement.csv").string(), placement_csv(results));
    sum += err;
    per += fmt("%s%.2f", s ? "/" : "", err);
  }
  const double mean = sum / tm.seeds();
  return {mean <= 0.5 * chance, fmt("mean placement error %.2f cm (seeds %s) vs <= %.2f cm", mean, per.c_str(), 0.5 * chance)};
}

// 10

Outcome determinism() {
  RunConfig cfg;
  cfg.resolve();
  const Dataset a = gen_dataset(cfg.generator, cfg.n_train, cfg.n_test);
  const Dataset b = gen_dataset(cfg.generator, cfg.n_train, cfg.n_test);
  const bool data_same = encode_samples(a.train) == encode_samples(b.train) && encode_samples(a.test) == encode_samples(b.test);

  const std::vector<TrimodalSample> train(a.train.begin(), a.train.begin() + 96);
  const std::vector<TrimodalSample> test(a.test.begin(), a.test.begin() + 64);
  TrainerConfig tc = cfg.trainer;
  tc.epochs = 3;
  tc.seed = 5;

  auto run = [&](int epochs) {
    TrainerConfig c = tc;
    c.epochs = epochs;
    Trainer t(cfg.model, c, train);
    t.train();
    return t.checkpoint();
  };
  auto report = [&](const Checkpoint& c) {
    const Model<float> m(c.model, c.params);
    return evaluate_all(embed_corpus(m, test), Protocol::small_batches(cfg.eval.eval_seed)).to_csv() +
           evaluate_all(embed_corpus(m, test), Protocol::all()).to_csv();
  };
  const TermSet terms = build_term_set(tc.variant);
  const Checkpoint r1 = run(3), r2 = run(3);
  const bool trace_same = loss_trace_csv(r1.trace, terms) == loss_trace_csv(r2.trace, terms);
  const bool ckpt_same = encode_checkpoint(r1) == encode_checkpoint(r2);
  const bool csv_same = report(r1) == report(r2);

  Checkpoint partial = decode_checkpoint(encode_checkpoint(run(2)));
  partial.trainer.epochs = 3;
  Trainer resumed(partial, train);
  resumed.train();
  const bool resume_same = loss_trace_csv(resumed.trace(), terms) == loss_trace_csv(r1.trace, terms) &&
                           encode_checkpoint(resumed.checkpoint()) == encode_checkpoint(r1);

  const bool ok = data_same && trace_same && ckpt_same && csv_same && resume_same;
  return {ok, fmt("dataset %s, loss trace %s, checkpoint %s, report CSV %s, resume %s", data_same ? "identical" : "DIFFERS",
                  trace_same ? "identical" : "DIFFERS", ckpt_same ? "identical" : "DIFFERS",
                  csv_same ? "identical" : "DIFFERS", resume_same ? "identical" : "DIFFERS")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trimodal acceptance criteria"};
  std::string cache = "acceptance_cache";
  int seeds = 3;
  std::vector<int> only;
  app.add_option("--cache", cache, "checkpoint cache directory");
  app.add_option("--seeds", seeds, "training seeds for criteria 6-9")->check(CLI::PositiveNumber);
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  TrainedModels tm(cache, seeds);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"closed-form loss oracle", loss_oracle},
      {"gradient check", gradient_check},
      {"retrieval oracle equivalence", retrieval_oracle},
      {"FID oracle", fid_oracle},
      {"placement lattice", lattice_check},
      {"end-to-end learnability", [&] { return learnability(tm); }},
      {"ablation direction", [&] { return ablation(tm); }},
      {"rotation degradation", [&] { return rotation(tm); }},
      {"placement better than chance", [&] { return placement(tm); }},
      {"determinism and persistence", determinism},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %2d %s: %s | %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
