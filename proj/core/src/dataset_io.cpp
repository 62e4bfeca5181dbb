#include <filesystem>
#include <map>
#include <sstream>

#include "trimodal/binary_io.hpp"
#include "trimodal/error.hpp"
#include "trimodal/store.hpp"

namespace trimodal {

namespace {

void write_vec3(io::Writer& w, const Vec3f& v) {
  w.f32(v.x());
  w.f32(v.y());
  w.f32(v.z());
}

Vec3f read_vec3(io::Reader& r) {
  Vec3f v;
  v.x() = r.f32();
  v.y() = r.f32();
  v.z() = r.f32();
  return v;
}

void write_object(io::Writer& w, const ObjectInstance& o) {
  w.str(o.label);
  write_vec3(w, o.anchor);
  write_vec3(w, o.half_extents);
  write_vec3(w, o.color);
}

ObjectInstance read_object(io::Reader& r) {
  ObjectInstance o;
  o.label = r.str(256);
  o.anchor = read_vec3(r);
  o.half_extents = read_vec3(r);
  o.color = read_vec3(r);
  return o;
}

void write_scene(io::Writer& w, const ScenePointCloud& s) {
  w.u32(static_cast<std::uint32_t>(s.points.size()));
  for (const auto& p : s.points) {
    for (float v : {p.x, p.y, p.z, p.r, p.g, p.b}) w.f32(v);
  }
  w.u8(s.meta ? 1 : 0);
  if (!s.meta) return;
  const auto& m = *s.meta;
  w.u32(static_cast<std::uint32_t>(m.objects.size()));
  for (const auto& o : m.objects) write_object(w, o);
  write_vec3(w, m.room_bounds.min);
  write_vec3(w, m.room_bounds.max);
  w.u8(m.entrance ? 1 : 0);
  if (m.entrance) write_object(w, *m.entrance);
  w.u32(static_cast<std::uint32_t>(m.point_owner.size()));
  for (auto o : m.point_owner) w.u16(static_cast<std::uint16_t>(o));
}

ScenePointCloud read_scene(io::Reader& r) {
  ScenePointCloud s;
  const auto n = r.u32();
  if (n > (1u << 26)) r.fail("implausible point count");
  s.points.resize(n);
  for (auto& p : s.points) {
    p.x = r.f32();
    p.y = r.f32();
    p.z = r.f32();
    p.r = r.f32();
    p.g = r.f32();
    p.b = r.f32();
  }
  if (r.u8() == 0) return s;
  SceneGraphMeta m;
  const auto objects = r.u32();
  if (objects > 4096) r.fail("implausible object count");
  for (std::uint32_t i = 0; i < objects; ++i) m.objects.push_back(read_object(r));
  m.room_bounds.min = read_vec3(r);
  m.room_bounds.max = read_vec3(r);
  if (r.u8() != 0) m.entrance = read_object(r);
  const auto owners = r.u32();
  if (owners > (1u << 26)) r.fail("implausible owner count");
  m.point_owner.resize(owners);
  for (auto& o : m.point_owner) o = static_cast<std::int16_t>(r.u16());
  s.meta = std::move(m);
  return s;
}

}  // namespace

std::string encode_samples(const std::vector<TrimodalSample>& samples) {
  std::ostringstream ss(std::ios::binary);
  io::Writer w(ss);
  w.magic("TMRD");
  w.u16(kDatasetFormatVersion);
  const std::uint32_t text_dim = samples.empty() ? kDefaultTextDim : static_cast<std::uint32_t>(samples.front().text.values.size());
  w.u32(text_dim);

  std::vector<const ScenePointCloud*> scenes;
  std::map<const ScenePointCloud*, std::uint32_t> scene_index;
  for (const auto& s : samples) {
    if (!s.scene) throw ConfigError("sample '" + s.id + "' has no scene");
    if (scene_index.emplace(s.scene.get(), static_cast<std::uint32_t>(scenes.size())).second) scenes.push_back(s.scene.get());
  }
  w.u32(static_cast<std::uint32_t>(scenes.size()));
  for (const auto* sc : scenes) write_scene(w, *sc);

  w.u32(static_cast<std::uint32_t>(samples.size()));
  for (const auto& s : samples) {
    if (s.text.values.size() != text_dim) throw ConfigError("sample '" + s.id + "' text length mismatch");
    w.str(s.id);
    w.u64(s.scene_seed);
    w.u32(scene_index.at(s.scene.get()));
    w.str(s.text.raw_caption);
    for (float v : s.text.values) w.f32(v);
    w.u32(static_cast<std::uint32_t>(s.motion.frame_count()));
    for (double v : s.motion.data()) w.f32(static_cast<float>(v));
    w.i32(s.truth.target_index);
    w.u8(static_cast<std::uint8_t>(s.truth.action));
    w.u32(static_cast<std::uint32_t>(s.truth.path.size()));
    for (const auto& p : s.truth.path) write_vec3(w, p);
  }
  return ss.str();
}

std::vector<TrimodalSample> decode_samples(const std::string& bytes) {
  std::istringstream ss(bytes, std::ios::binary);
  io::Reader r(ss, "dataset");
  r.expect_magic("TMRD");
  const auto version = r.u16();
  if (version != kDatasetFormatVersion) r.fail("unsupported version " + std::to_string(version));
  const auto text_dim = r.u32();
  if (text_dim == 0 || text_dim > (1u << 20)) r.fail("implausible text dim");

  const auto n_scenes = r.u32();
  std::vector<std::shared_ptr<const ScenePointCloud>> scenes;
  for (std::uint32_t i = 0; i < n_scenes; ++i) scenes.push_back(std::make_shared<const ScenePointCloud>(read_scene(r)));

  const auto n = r.u32();
  std::vector<TrimodalSample> out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    TrimodalSample s;
    s.id = r.str(1024);
    s.scene_seed = r.u64();
    const auto si = r.u32();
    if (si >= scenes.size()) r.fail("scene index out of range");
    s.scene = scenes[si];
    s.text.raw_caption = r.str();
    s.text.values.resize(text_dim);
    for (auto& v : s.text.values) v = r.f32();
    const auto frames = r.u32();
    if (frames > (1u << 20)) r.fail("implausible frame count");
    std::vector<double> data(static_cast<std::size_t>(frames) * kNumJoints * 3);
    for (auto& v : data) v = r.f32();
    s.motion = MotionSequence(static_cast<int>(frames), std::move(data));
    s.truth.target_index = r.i32();
    const auto action = r.u8();
    if (action >= kNumActions) r.fail("bad action tag");
    s.truth.action = static_cast<Action>(action);
    const auto waypoints = r.u32();
    if (waypoints > (1u << 20)) r.fail("implausible path length");
    for (std::uint32_t k = 0; k < waypoints; ++k) s.truth.path.push_back(read_vec3(r));
    out.push_back(std::move(s));
  }
  r.expect_end();
  return out;
}

namespace {

std::size_t count_scenes(const std::vector<TrimodalSample>& samples) {
  std::map<const ScenePointCloud*, int> seen;
  for (const auto& s : samples) seen.emplace(s.scene.get(), 0);
  return seen.size();
}

}  // namespace

DatasetManifest save_dataset(const std::string& dir, const Dataset& data, const GeneratorConfig& cfg) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  io::write_file((root / "train.tmrd").string(), encode_samples(data.train));
  io::write_file((root / "test.tmrd").string(), encode_samples(data.test));
  DatasetManifest m;
  m.seed = cfg.seed;
  m.n_train = data.train.size();
  m.n_test = data.test.size();
  m.train_scenes = count_scenes(data.train);
  m.test_scenes = count_scenes(data.test);
  if (!data.train.empty()) m.text_dim = static_cast<int>(data.train.front().text.values.size());
  std::ostringstream ss;
  ss << "format TMRD " << kDatasetFormatVersion << "\n"
     << "seed " << m.seed << "\n"
     << "n_train " << m.n_train << "\n"
     << "n_test " << m.n_test << "\n"
     << "train_scenes " << m.train_scenes << "\n"
     << "test_scenes " << m.test_scenes << "\n"
     << "text_dim " << m.text_dim << "\n"
     << "train_file train.tmrd\n"
     << "test_file test.tmrd\n";
  io::write_file((root / "manifest.txt").string(), ss.str());
  return m;
}

DatasetManifest read_manifest(const std::string& dir) {
  std::istringstream in(io::read_file((std::filesystem::path(dir) / "manifest.txt").string()));
  DatasetManifest m;
  std::string key;
  while (in >> key) {
    if (key == "format") {
      std::string magic;
      int version = 0;
      in >> magic >> version;
      if (magic != "TMRD" || version != kDatasetFormatVersion) throw FormatError("unsupported dataset manifest");
    } else if (key == "seed") {
      in >> m.seed;
    } else if (key == "n_train") {
      in >> m.n_train;
    } else if (key == "n_test") {
      in >> m.n_test;
    } else if (key == "train_scenes") {
      in >> m.train_scenes;
    } else if (key == "test_scenes") {
      in >> m.test_scenes;
    } else if (key == "text_dim") {
      in >> m.text_dim;
    } else {
      std::string rest;
      std::getline(in, rest);
    }
    if (!in && !in.eof()) throw FormatError("malformed manifest entry '" + key + "'");
  }
  return m;
}

Dataset load_dataset(const std::string& dir) {
  const auto m = read_manifest(dir);
  const std::filesystem::path root(dir);
  Dataset d;
  d.train = decode_samples(io::read_file((root / "train.tmrd").string()));
  d.test = decode_samples(io::read_file((root / "test.tmrd").string()));
  if (d.train.size() != m.n_train || d.test.size() != m.n_test) throw FormatError("dataset counts disagree with manifest");
  return d;
}

}  // namespace trimodal
