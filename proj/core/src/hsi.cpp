#include "trimodal/hsi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "trimodal/error.hpp"
#include "trimodal/random.hpp"
#include "trimodal/retrieval.hpp"

namespace trimodal {

// Gaussians and Frechet distance

GaussianMoments fit_gaussian(const Eigen::MatrixXd& rows) {
  if (rows.rows() < 2) throw ConfigError("fit_gaussian needs at least 2 samples");
  GaussianMoments g;
  g.count = static_cast<std::size_t>(rows.rows());
  g.mean = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = rows.rowwise() - g.mean.transpose();
  g.covariance = (centered.transpose() * centered) / static_cast<double>(rows.rows() - 1);
  g.covariance = 0.5 * (g.covariance + g.covariance.transpose());
  return g;
}

GaussianMoments fit_gaussian(const std::vector<LatentVector>& latents) {
  if (latents.empty()) throw ConfigError("fit_gaussian needs at least 2 samples");
  const auto d = static_cast<Eigen::Index>(latents.front().values.size());
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(latents.size()), d);
  for (std::size_t i = 0; i < latents.size(); ++i) {
    if (static_cast<Eigen::Index>(latents[i].values.size()) != d) throw ConfigError("latent dims differ");
    for (Eigen::Index k = 0; k < d; ++k) rows(static_cast<Eigen::Index>(i), k) = latents[i].values[static_cast<std::size_t>(k)];
  }
  return fit_gaussian(rows);
}

namespace {

void require_symmetric(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) throw NumericError(std::string(what) + " is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) throw NumericError(std::string(what) + " is not symmetric");
}

}  // namespace

Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& m) {
  require_symmetric(m, "matrix");
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double frechet_distance(const GaussianMoments& a, const GaussianMoments& b) {
  if (a.mean.size() != b.mean.size()) throw ConfigError("Gaussian dimensions differ");
  require_symmetric(a.covariance, "first covariance");
  require_symmetric(b.covariance, "second covariance");
  const Eigen::MatrixXd ra = sqrtm_psd(a.covariance);
  Eigen::MatrixXd inner = ra * b.covariance * ra;
  inner = 0.5 * (inner + inner.transpose());
  const Eigen::MatrixXd cross = sqrtm_psd(inner);
  const double d = (a.mean - b.mean).squaredNorm() + a.covariance.trace() + b.covariance.trace() - 2.0 * cross.trace();
  return std::max(0.0, d);
}

Eigen::MatrixXd embed_source(const Model<float>& model, const std::vector<TrimodalSample>& samples, Source source) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(samples.size()), model.config().latent_dim);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto out = model.forward(prepare_inputs(samples[i], model.config()), nullptr, nullptr);
    rows.row(static_cast<Eigen::Index>(i)) = out.z.row(source_index(source)).cast<double>();
  }
  return rows;
}

double fid_score(const Model<float>& model, const std::vector<TrimodalSample>& generated,
                 const std::vector<TrimodalSample>& reference) {
  if (generated.size() < 2 || reference.size() < 2) throw ConfigError("FID needs at least 2 samples per set");
  return frechet_distance(fit_gaussian(embed_source(model, generated, Source::MS)),
                          fit_gaussian(embed_source(model, reference, Source::MS)));
}

double fid_split_baseline(const Model<float>& model, const std::vector<TrimodalSample>& reference, std::uint64_t seed) {
  if (reference.size() < 4) throw ConfigError("split baseline needs at least 4 samples");
  std::vector<std::size_t> order(reference.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  const std::size_t half = order.size() / 2;
  std::vector<TrimodalSample> a, b;
  for (std::size_t i = 0; i < half; ++i) a.push_back(reference[order[i]]);
  for (std::size_t i = half; i < 2 * half; ++i) b.push_back(reference[order[i]]);
  return fid_score(model, a, b);
}

std::array<double, 3> hsi_recall(const Model<float>& model, const std::vector<TrimodalSample>& generated,
                                 const std::vector<TrimodalSample>& pool) {
  if (pool.size() < 2) throw ConfigError("hsi_recall needs a condition pool of at least 2");
  if (generated.empty()) throw ConfigError("hsi_recall needs generated motions");
  EmbeddingStore conditions(model.config().latent_dim);
  for (const auto& s : pool) {
    for (const auto& v : embed_all(model, s, Mode::Eval)) {
      if (v.source == Source::ST) conditions.add(v);
    }
  }
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < conditions.size(); ++i) cands.push_back({conditions.ids()[i], conditions.latent(i, Source::ST)});
  std::vector<int> ranks;
  for (const auto& g : generated) {
    const auto latents = embed_all(model, g, Mode::Eval);
    const auto& vm = latents[source_index(Source::M)].values;
    (void)conditions.index_of(g.id);
    ranks.push_back(rank_candidates(vm, cands, g.id).truth_rank);
  }
  return {recall_at_k(ranks, 1), recall_at_k(ranks, 2), recall_at_k(ranks, 3)};
}

// Rotation and interpenetration

MotionSequence rotate_motion(const MotionSequence& m, double theta, std::optional<Vec3d> pivot) {
  if (m.frame_count() < 1) throw ConfigError("empty motion");
  const Vec3d p = pivot ? *pivot : m.pelvis(m.frame_count() - 1);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  MotionSequence out(m.frame_count());
  for (int f = 0; f < m.frame_count(); ++f) {
    for (int j = 0; j < kNumJoints; ++j) {
      const Vec3d q = m.joint(f, j);
      const double dx = q.x() - p.x();
      const double dz = q.z() - p.z();
      out.set_joint(f, j, Vec3d(p.x() + c * dx + s * dz, q.y(), p.z() - s * dx + c * dz));
    }
  }
  return out;
}

namespace {

bool strictly_inside_shrunk(const Box& b, const Vec3d& q, double margin) {
  for (int k = 0; k < 3; ++k) {
    const double lo = static_cast<double>(b.min[k]) + margin;
    const double hi = static_cast<double>(b.max[k]) - margin;
    if (!(q[k] > lo && q[k] < hi)) return false;
  }
  return true;
}

}  // namespace

InterpenetrationReport check_interpenetration(const MotionSequence& m, const ScenePointCloud& scene, int exclude_index) {
  InterpenetrationReport r;
  if (scene.meta) {
    std::vector<Box> boxes;
    for (std::size_t i = 0; i < scene.meta->objects.size(); ++i) {
      if (static_cast<int>(i) != exclude_index) boxes.push_back(scene.meta->objects[i].box());
    }
    if (scene.meta->entrance) boxes.push_back(scene.meta->entrance->box());
    for (int f = 0; f < m.frame_count(); ++f) {
      for (int j = 0; j < kNumJoints; ++j) {
        const Vec3d q = m.joint(f, j);
        for (const auto& b : boxes) {
          if (strictly_inside_shrunk(b, q, kPenetrationMargin)) {
            r.hits.emplace_back(f, j);
            break;
          }
        }
      }
    }
  } else {
    constexpr double kFloorLevel = 0.01;
    const double r2 = kPointContactRadius * kPointContactRadius;
    for (int f = 0; f < m.frame_count(); ++f) {
      for (int j = 0; j < kNumJoints; ++j) {
        const Vec3d q = m.joint(f, j);
        for (const auto& p : scene.points) {
          if (p.y <= kFloorLevel) continue;
          const Vec3d d(p.x - q.x(), p.y - q.y(), p.z - q.z());
          if (d.squaredNorm() < r2) {
            r.hits.emplace_back(f, j);
            break;
          }
        }
      }
    }
  }
  r.interpenetrating = !r.hits.empty();
  return r;
}

bool motion_in_room(const MotionSequence& m, const ScenePointCloud& scene) {
  Box room;
  if (scene.meta) {
    room = scene.meta->room_bounds;
  } else {
    if (scene.points.empty()) return true;
    room.min = room.max = scene.points.front().position();
    for (const auto& p : scene.points) {
      room.min = room.min.cwiseMin(p.position());
      room.max = room.max.cwiseMax(p.position());
    }
  }
  for (int f = 0; f < m.frame_count(); ++f) {
    for (int j = 0; j < kNumJoints; ++j) {
      const Vec3d q = m.joint(f, j);
      if (q.x() < room.min.x() || q.x() > room.max.x() || q.z() < room.min.z() || q.z() > room.max.z()) return false;
    }
  }
  return true;
}

SweepMode parse_sweep_mode(const std::string& name) {
  if (name == "filtered") return SweepMode::Filtered;
  if (name == "unfiltered") return SweepMode::Unfiltered;
  throw ConfigError("unknown sweep mode '" + name + "'");
}

std::string sweep_mode_name(SweepMode m) { return m == SweepMode::Filtered ? "filtered" : "unfiltered"; }

std::vector<double> sweep_angles(int steps) {
  if (steps < 2) throw ConfigError("sweep needs at least 2 angles");
  std::vector<double> a;
  for (int i = 0; i < steps; ++i) a.push_back(M_PI * i / (steps - 1));
  return a;
}

RotationSweepResult rotation_sweep(const Model<float>& model, const std::vector<TrimodalSample>& samples,
                                   const std::vector<double>& angles, SweepMode mode, const SweepOptions& options) {
  if (samples.size() < 2) throw ConfigError("rotation sweep needs at least 2 samples");
  if (!std::is_sorted(angles.begin(), angles.end()) || angles.empty() || angles.front() != 0.0) {
    throw ConfigError("sweep angles must be ascending and start at 0");
  }
  const ModelConfig& mc = model.config();
  const int d = mc.latent_dim;

  // Scene-text latents do not depend on the motion.
  std::vector<PreparedInputs> inputs;
  Eigen::MatrixXd reference(static_cast<Eigen::Index>(samples.size()), d);
  std::vector<std::vector<float>> st(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    inputs.push_back(prepare_inputs(samples[i], mc));
    const auto out = model.forward(inputs.back(), nullptr, nullptr);
    reference.row(static_cast<Eigen::Index>(i)) = out.z.row(source_index(Source::MS)).cast<double>();
    const auto row = out.z.row(source_index(Source::ST));
    st[i].assign(row.data(), row.data() + d);
  }
  const GaussianMoments ref = fit_gaussian(reference);

  RotationSweepResult result;
  result.mode = mode;
  for (double theta : angles) {
    SweepRow row;
    row.theta = theta;
    EmbeddingStore store(d);
    std::vector<Eigen::RowVectorXd> ms;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      const MotionSequence rotated = rotate_motion(s.motion, theta);
      if (!motion_in_room(rotated, *s.scene)) {
        ++row.out_of_bounds;
        ++row.rejected;
        continue;
      }
      const bool inter = check_interpenetration(rotated, *s.scene, s.truth.target_index).interpenetrating;
      if (inter) ++row.interpenetrating;
      if (inter && mode == SweepMode::Filtered) {
        ++row.rejected;
        continue;
      }
      PreparedInputs in = inputs[i];
      in.motion_features = prepare_motion(rotated, mc);
      const auto out = model.forward(in, nullptr, nullptr);
      ms.push_back(out.z.row(source_index(Source::MS)).cast<double>());
      const auto m = out.z.row(source_index(Source::M));
      store.add(s.id, Source::M, std::span<const float>(m.data(), static_cast<std::size_t>(d)));
      store.add(s.id, Source::ST, st[i]);
    }
    row.kept = static_cast<int>(ms.size());
    if (row.kept < 2) {
      row.skipped = true;
      row.fid = std::nan("");
      row.recall1 = std::nan("");
      result.rows.push_back(row);
      continue;
    }
    Eigen::MatrixXd gen(row.kept, d);
    for (int i = 0; i < row.kept; ++i) gen.row(i) = ms[static_cast<std::size_t>(i)];
    row.fid = frechet_distance(fit_gaussian(gen), ref);
    const Protocol protocol = row.kept >= options.batch_size ? Protocol::small_batches(options.seed, options.batch_size)
                                                             : Protocol::all();
    row.recall1 = evaluate_task(find_task("st2m"), protocol, store).recall[0];
    result.rows.push_back(row);
  }
  return result;
}

std::string RotationSweepResult::to_csv() const {
  std::string out = "theta,fid,recall1,mode,kept,interpenetrating,out_of_bounds,skipped\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.4f,%s,%d,%d,%d,%d\n", r.theta, r.fid, r.recall1,
                  sweep_mode_name(mode).c_str(), r.kept, r.interpenetrating, r.out_of_bounds, r.skipped ? 1 : 0);
    out += buf;
  }
  return out;
}

std::string RotationSweepResult::to_gnuplot() const {
  std::string out = "# " + sweep_mode_name(mode) + "\n# theta fid recall1\n";
  char buf[96];
  for (const auto& r : rows) {
    if (r.skipped) continue;
    std::snprintf(buf, sizeof buf, "%.6f %.6f %.4f\n", r.theta, r.fid, r.recall1);
    out += buf;
  }
  return out;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("spearman needs two equal series of length >= 2");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

// Placement

std::vector<Vec3d> placement_offsets(double cell, int half) {
  if (!(cell > 0) || half < 0) throw ConfigError("placement grid needs a positive cell and non-negative half width");
  std::vector<Vec3d> out;
  for (int ix = -half; ix <= half; ++ix) {
    for (int iy = -half; iy <= half; ++iy) {
      for (int iz = -half; iz <= half; ++iz) out.emplace_back(ix * cell, iy * cell, iz * cell);
    }
  }
  return out;
}

ScenePointCloud translate_object(const ScenePointCloud& scene, int target, const Vec3d& offset) {
  if (!scene.meta) throw ConfigError("object placement needs scene metadata");
  const auto& meta = *scene.meta;
  if (target < 0 || target >= static_cast<int>(meta.objects.size())) throw ConfigError("target index invalid");
  if (meta.point_owner.size() != scene.points.size()) throw ConfigError("scene lacks per-point ownership");
  ScenePointCloud out = scene;
  const Vec3f off = offset.cast<float>();
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    if (meta.point_owner[i] != target) continue;
    out.points[i].x += off.x();
    out.points[i].y += off.y();
    out.points[i].z += off.z();
  }
  out.meta->objects[static_cast<std::size_t>(target)].anchor += off;
  return out;
}

PlacementResult place_object_grid(const TrimodalSample& sample, double cell, const PlacementScorer& scorer) {
  if (!sample.scene || !sample.scene->meta) throw ConfigError("object placement needs scene metadata");
  const auto& meta = *sample.scene->meta;
  const int target = sample.truth.target_index;
  if (target < 0 || target >= static_cast<int>(meta.objects.size())) throw ConfigError("target index invalid");
  PlacementResult r;
  r.sample_id = sample.id;
  double best = -std::numeric_limits<double>::infinity();
  double best_norm = std::numeric_limits<double>::infinity();
  const Box box = meta.objects[static_cast<std::size_t>(target)].box();
  for (const Vec3d& off : placement_offsets(cell)) {
    if (!meta.room_bounds.contains(box.translated(off.cast<float>()))) {
      ++r.rejected;
      continue;
    }
    const double score = scorer(off, translate_object(*sample.scene, target, off));
    ++r.evaluated;
    const double norm = off.norm();
    if (score > best || (score == best && norm < best_norm)) {
      best = score;
      best_norm = norm;
      r.predicted = off;
    }
  }
  if (r.evaluated == 0) throw ConfigError("no placement candidate stays inside the room");
  r.error_cm = 100.0 * r.predicted.norm();
  return r;
}

PlacementScorer model_placement_scorer(const Model<float>& model, const TrimodalSample& sample) {
  const auto out = model.forward(prepare_inputs(sample, model.config()), nullptr, nullptr);
  const auto row = out.z.row(source_index(Source::MT));
  std::vector<float> mt(row.data(), row.data() + row.size());
  return [&model, mt](const Vec3d&, const ScenePointCloud& edited) {
    const auto vs = model.embed_scene(edited);
    return cosine(mt, std::span<const float>(vs.data(), static_cast<std::size_t>(vs.size())));
  };
}

std::string placement_csv(const std::vector<PlacementResult>& results) {
  std::string out = "sample_id,pred_dx_cm,pred_dy_cm,pred_dz_cm,error_cm\n";
  char buf[128];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, ",%.1f,%.1f,%.1f,%.4f\n", 100.0 * r.predicted.x(), 100.0 * r.predicted.y(),
                  100.0 * r.predicted.z(), r.error_cm);
    out += r.sample_id + buf;
  }
  return out;
}

}  // namespace trimodal
