#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "trimodal/core_types.hpp"
#include "trimodal/model.hpp"

namespace trimodal {

struct RetrievalTask {
  std::string_view name;      // prose name, e.g. t2ms
  std::string_view csv_name;  // table column, e.g. t2sm
  Source query;
  Source target;
};

inline constexpr std::array<int, 5> kRecallRanks = {1, 2, 3, 5, 10};

// The twelve tasks in report column order.
[[nodiscard]] const std::array<RetrievalTask, 12>& retrieval_tasks();
// Accepts either the prose or the table name.
[[nodiscard]] const RetrievalTask& find_task(std::string_view name);

// Six latents per sample, id-indexed. Sample order is insertion order.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(int dim = 0) : dim_(dim) {}

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] std::size_t size() const { return ids_.size(); }
  [[nodiscard]] const std::vector<std::string>& ids() const { return ids_; }
  [[nodiscard]] std::size_t index_of(const std::string& id) const;

  void add(const std::string& id, Source s, std::span<const float> values);
  void add(const LatentVector& v) { add(v.sample_id, v.source, v.values); }

  [[nodiscard]] bool has(Source s) const;
  [[nodiscard]] std::uint8_t sources_bitmap() const;
  [[nodiscard]] std::span<const float> latent(std::size_t index, Source s) const;
  // Records in sample-major, source order.
  [[nodiscard]] std::vector<LatentVector> latents() const;

  bool operator==(const EmbeddingStore& other) const;

 private:
  int dim_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::array<std::vector<float>, kNumSources> data_;
  std::array<std::vector<bool>, kNumSources> present_;
};

[[nodiscard]] EmbeddingStore embed_corpus(const Model<float>& model, const std::vector<TrimodalSample>& samples);

struct Candidate {
  std::string id;
  std::span<const float> values;
};

struct Ranking {
  std::vector<std::string> order;  // best first
  int truth_rank = 0;              // 1-based
};

[[nodiscard]] double cosine(std::span<const float> a, std::span<const float> b);

// Descending cosine, ties by ascending id.
[[nodiscard]] Ranking rank_candidates(std::span<const float> query, const std::vector<Candidate>& candidates,
                                      const std::string& truth_id);

struct Protocol {
  enum class Kind { All, SmallBatches };
  Kind kind = Kind::All;
  int batch_size = 32;
  std::uint64_t seed = 0;

  static Protocol all() { return {}; }
  static Protocol small_batches(std::uint64_t seed, int batch = 32) { return {Kind::SmallBatches, batch, seed}; }
  [[nodiscard]] std::string_view name() const { return kind == Kind::All ? "all" : "small"; }
};

[[nodiscard]] Protocol parse_protocol(std::string_view name, std::uint64_t seed);

// Index pools the protocol evaluates over a store of `count` samples.
[[nodiscard]] std::vector<std::vector<std::size_t>> protocol_pools(const Protocol& p, std::size_t count);

struct TaskResult {
  std::string_view name;
  std::string_view csv_name;
  std::array<double, 5> recall{};  // at kRecallRanks, percent
  double mrecall = 0.0;
  std::vector<int> ranks;          // one per query, pool order
  int pools = 0;
};

[[nodiscard]] TaskResult evaluate_task(const RetrievalTask& task, const Protocol& protocol,
                                       const EmbeddingStore& store);

// Percent of ranks <= k.
[[nodiscard]] double recall_at_k(std::span<const int> ranks, int k);
[[nodiscard]] double mrecall(std::span<const double> recalls);
// Throws unless ranks are exactly {1, 2, 3, 5, 10}.
void validate_rank_set(std::span<const int> ranks);

struct RetrievalReport {
  Protocol protocol;
  std::size_t pool_size = 0;
  std::vector<TaskResult> tasks;  // report column order

  [[nodiscard]] std::array<double, 5> average_recall() const;
  [[nodiscard]] double average_mrecall() const;
  [[nodiscard]] const TaskResult& task(std::string_view name) const;
  [[nodiscard]] std::string to_csv() const;
};

[[nodiscard]] RetrievalReport evaluate_all(const EmbeddingStore& store, const Protocol& protocol);

}  // namespace trimodal
