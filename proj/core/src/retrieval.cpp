#include "trimodal/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "trimodal/error.hpp"
#include "trimodal/random.hpp"

namespace trimodal {

const std::array<RetrievalTask, 12>& retrieval_tasks() {
  using enum Source;
  static const std::array<RetrievalTask, 12> tasks = {{
      {"st2m", "st2m", ST, M},
      {"m2st", "m2st", M, ST},
      {"ms2t", "ms2t", MS, T},
      {"t2ms", "t2sm", T, MS},
      {"mt2s", "tm2s", MT, S},
      {"s2mt", "s2mt", S, MT},
      {"t2m", "t2m", T, M},
      {"m2t", "m2t", M, T},
      {"s2m", "s2m", S, M},
      {"m2s", "m2s", M, S},
      {"t2s", "t2s", T, S},
      {"s2t", "s2t", S, T},
  }};
  return tasks;
}

const RetrievalTask& find_task(std::string_view name) {
  for (const auto& t : retrieval_tasks()) {
    if (t.name == name || t.csv_name == name) return t;
  }
  throw ConfigError("unknown retrieval task '" + std::string(name) + "'");
}

// EmbeddingStore

std::size_t EmbeddingStore::index_of(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw ConfigError("sample '" + id + "' not in store");
  return it->second;
}

void EmbeddingStore::add(const std::string& id, Source s, std::span<const float> values) {
  if (dim_ == 0) dim_ = static_cast<int>(values.size());
  if (static_cast<int>(values.size()) != dim_) throw ConfigError("latent dim mismatch for '" + id + "'");
  for (float v : values) {
    if (!std::isfinite(v)) throw NumericError("non-finite latent for '" + id + "'");
  }
  auto [it, inserted] = index_.try_emplace(id, ids_.size());
  if (inserted) {
    ids_.push_back(id);
    for (int k = 0; k < kNumSources; ++k) {
      data_[k].resize(ids_.size() * static_cast<std::size_t>(dim_), 0.0f);
      present_[k].push_back(false);
    }
  }
  const int k = source_index(s);
  std::copy(values.begin(), values.end(), data_[k].begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
  present_[k][it->second] = true;
}

bool EmbeddingStore::has(Source s) const {
  const auto& p = present_[source_index(s)];
  return !ids_.empty() && std::all_of(p.begin(), p.end(), [](bool b) { return b; });
}

std::uint8_t EmbeddingStore::sources_bitmap() const {
  std::uint8_t bits = 0;
  for (int k = 0; k < kNumSources; ++k) {
    if (has(kAllSources[k])) bits |= static_cast<std::uint8_t>(1u << k);
  }
  return bits;
}

std::span<const float> EmbeddingStore::latent(std::size_t index, Source s) const {
  const int k = source_index(s);
  if (index >= ids_.size() || !present_[k][index]) {
    throw ConfigError("store lacks source '" + std::string(source_name(s)) + "' for sample " + std::to_string(index));
  }
  return {data_[k].data() + index * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
}

std::vector<LatentVector> EmbeddingStore::latents() const {
  std::vector<LatentVector> out;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    for (int k = 0; k < kNumSources; ++k) {
      if (!present_[k][i]) continue;
      const auto v = latent(i, kAllSources[k]);
      out.push_back({std::vector<float>(v.begin(), v.end()), kAllSources[k], ids_[i]});
    }
  }
  return out;
}

bool EmbeddingStore::operator==(const EmbeddingStore& o) const {
  return dim_ == o.dim_ && ids_ == o.ids_ && data_ == o.data_ && present_ == o.present_;
}

EmbeddingStore embed_corpus(const Model<float>& model, const std::vector<TrimodalSample>& samples) {
  EmbeddingStore store(model.config().latent_dim);
  for (const auto& s : samples) {
    for (const auto& v : embed_all(model, s, Mode::Eval)) store.add(v);
  }
  return store;
}

// Ranking

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ConfigError("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw NumericError("cosine of a zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

Ranking rank_candidates(std::span<const float> query, const std::vector<Candidate>& candidates,
                        const std::string& truth_id) {
  if (candidates.empty()) throw ConfigError("no candidates");
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) scored.emplace_back(cosine(query, candidates[i].values), i);
  std::sort(scored.begin(), scored.end(), [&](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return candidates[x.second].id < candidates[y.second].id;
  });
  Ranking r;
  for (std::size_t pos = 0; pos < scored.size(); ++pos) {
    const auto& id = candidates[scored[pos].second].id;
    r.order.push_back(id);
    if (id == truth_id && r.truth_rank == 0) r.truth_rank = static_cast<int>(pos) + 1;
  }
  if (r.truth_rank == 0) throw ConfigError("ground truth '" + truth_id + "' absent from candidates");
  return r;
}

Protocol parse_protocol(std::string_view name, std::uint64_t seed) {
  if (name == "all") return Protocol::all();
  if (name == "small") return Protocol::small_batches(seed);
  throw ConfigError("unknown protocol '" + std::string(name) + "'");
}

std::vector<std::vector<std::size_t>> protocol_pools(const Protocol& p, std::size_t count) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (p.kind == Protocol::Kind::All) {
    if (count == 0) throw ConfigError("empty evaluation set");
    return {order};
  }
  if (p.batch_size < 1) throw ConfigError("batch size must be positive");
  const auto b = static_cast<std::size_t>(p.batch_size);
  if (count < b) throw ConfigError("test set smaller than batch size " + std::to_string(b));
  Rng rng(p.seed);
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> pools;
  for (std::size_t start = 0; start + b <= count; start += b) {
    pools.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                       order.begin() + static_cast<std::ptrdiff_t>(start + b));
  }
  return pools;
}

double recall_at_k(std::span<const int> ranks, int k) {
  if (ranks.empty()) throw ConfigError("recall over an empty rank list");
  std::size_t hits = 0;
  for (int r : ranks) {
    if (r < 1) throw ConfigError("ranks are 1-based");
    if (r <= k) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mrecall(std::span<const double> recalls) {
  if (recalls.size() != kRecallRanks.size()) throw ConfigError("mRecall needs exactly five recall values");
  return std::accumulate(recalls.begin(), recalls.end(), 0.0) / static_cast<double>(recalls.size());
}

void validate_rank_set(std::span<const int> ranks) {
  if (!std::equal(ranks.begin(), ranks.end(), kRecallRanks.begin(), kRecallRanks.end())) {
    throw ConfigError("recall ranks must be {1, 2, 3, 5, 10}");
  }
}

TaskResult evaluate_task(const RetrievalTask& task, const Protocol& protocol, const EmbeddingStore& store) {
  for (Source s : {task.query, task.target}) {
    if (!store.has(s)) throw ConfigError("store lacks source '" + std::string(source_name(s)) + "'");
  }
  TaskResult res;
  res.name = task.name;
  res.csv_name = task.csv_name;
  const auto pools = protocol_pools(protocol, store.size());
  res.pools = static_cast<int>(pools.size());
  std::array<double, 5> sums{};
  for (const auto& pool : pools) {
    std::vector<Candidate> cands;
    cands.reserve(pool.size());
    for (std::size_t idx : pool) cands.push_back({store.ids()[idx], store.latent(idx, task.target)});
    std::vector<int> ranks;
    ranks.reserve(pool.size());
    for (std::size_t idx : pool) {
      ranks.push_back(rank_candidates(store.latent(idx, task.query), cands, store.ids()[idx]).truth_rank);
    }
    for (std::size_t k = 0; k < kRecallRanks.size(); ++k) sums[k] += recall_at_k(ranks, kRecallRanks[k]);
    res.ranks.insert(res.ranks.end(), ranks.begin(), ranks.end());
  }
  for (std::size_t k = 0; k < kRecallRanks.size(); ++k) res.recall[k] = sums[k] / static_cast<double>(pools.size());
  res.mrecall = mrecall(res.recall);
  return res;
}

RetrievalReport evaluate_all(const EmbeddingStore& store, const Protocol& protocol) {
  RetrievalReport r;
  r.protocol = protocol;
  r.pool_size = protocol.kind == Protocol::Kind::All ? store.size() : static_cast<std::size_t>(protocol.batch_size);
  for (const auto& t : retrieval_tasks()) r.tasks.push_back(evaluate_task(t, protocol, store));
  return r;
}

std::array<double, 5> RetrievalReport::average_recall() const {
  std::array<double, 5> avg{};
  for (const auto& t : tasks) {
    for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += t.recall[k];
  }
  for (auto& v : avg) v /= static_cast<double>(tasks.size());
  return avg;
}

double RetrievalReport::average_mrecall() const {
  const auto avg = average_recall();
  return mrecall(avg);
}

const TaskResult& RetrievalReport::task(std::string_view name) const {
  const auto& want = find_task(name);
  for (const auto& t : tasks) {
    if (t.name == want.name) return t;
  }
  throw ConfigError("task '" + std::string(name) + "' not in report");
}

std::string RetrievalReport::to_csv() const {
  std::string out = "metric";
  for (const auto& t : tasks) out += "," + std::string(t.csv_name);
  out += ",avg\n";
  const auto avg = average_recall();
  char buf[32];
  auto row = [&](const std::string& label, auto value_of, double avg_value) {
    out += label;
    for (const auto& t : tasks) {
      std::snprintf(buf, sizeof buf, ",%.4f", value_of(t));
      out += buf;
    }
    std::snprintf(buf, sizeof buf, ",%.4f\n", avg_value);
    out += buf;
  };
  for (std::size_t k = 0; k < kRecallRanks.size(); ++k) {
    row("R@" + std::to_string(kRecallRanks[k]), [k](const TaskResult& t) { return t.recall[k]; }, avg[k]);
  }
  row("mRecall", [](const TaskResult& t) { return t.mrecall; }, average_mrecall());
  return out;
}

}  // namespace trimodal
