#include "toporel/batching.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace toporel {

ClassPartition partition_by_class(const std::vector<int>& labels) {
  if (labels.empty()) throw EmptyDataset("partition_by_class: no samples");
  int max_label = 0;
  for (int l : labels) {
    if (l < 0) throw LabelOutOfRange("partition_by_class: negative label");
    max_label = std::max(max_label, l);
  }
  ClassPartition p;
  p.by_class.resize(max_label + 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    p.by_class[labels[i]].push_back(static_cast<int>(i));
  }
  for (int c = 0; c <= max_label; ++c) {
    if (p.by_class[c].empty()) {
      throw EmptyDataset("partition_by_class: class " + std::to_string(c) + " has no samples");
    }
  }
  return p;
}

TopoBatchLoader::TopoBatchLoader(const ClassPartition& partition, int dataset_size, int n,
                                 std::uint64_t seed)
    : partition_(partition),
      dataset_size_(dataset_size),
      n_(n),
      rng_(seed),
      touch_counts_(dataset_size, 0) {
  if (n < 2) {
    throw SubBatchTooSmall("TopoBatchLoader: sub-batch size must be >= 2 (persistence needs "
                           "at least 2 points per class)");
  }
  if (dataset_size < 1) throw EmptyDataset("TopoBatchLoader: empty dataset");
  batches_per_epoch_ = (dataset_size + n - 1) / n;
  order_.resize(dataset_size);
  std::iota(order_.begin(), order_.end(), 0);
  reshuffle();
}

void TopoBatchLoader::reshuffle() {
  for (int i = dataset_size_ - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(order_[i], order_[pick(rng_)]);
  }
  cursor_ = 0;
}

TopoBatch TopoBatchLoader::next() {
  TopoBatch batch;
  batch.n = n_;
  for (const auto& pool : partition_.by_class) {
    std::vector<int> sub(n_);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(pool.size()) - 1);
    for (int i = 0; i < n_; ++i) sub[i] = pool[pick(rng_)];
    batch.sub_batches.push_back(std::move(sub));
  }
  std::vector<int> standard(n_);
  for (int i = 0; i < n_; ++i) {
    if (cursor_ == order_.size()) reshuffle();
    standard[i] = order_[cursor_++];
    ++touch_counts_[standard[i]];
  }
  batch.sub_batches.push_back(std::move(standard));
  ++batches_served_;
  return batch;
}

std::vector<std::vector<int>> build_original_batch(const ClassPartition& partition,
                                                   const std::vector<int>& labels, int b, int n,
                                                   Rng& rng) {
  if (b < 1) throw SubBatchTooSmall("build_original_batch: b must be >= 1");
  if (n < 2) throw SubBatchTooSmall("build_original_batch: n must be >= 2");
  if (labels.empty()) throw EmptyDataset("build_original_batch: empty dataset");
  std::uniform_int_distribution<int> pick_any(0, static_cast<int>(labels.size()) - 1);
  std::vector<std::vector<int>> batch;
  batch.reserve(b);
  for (int s = 0; s < b; ++s) {
    std::vector<int> sub(n);
    sub[0] = pick_any(rng);
    const auto& pool = partition.by_class[labels[sub[0]]];
    std::uniform_int_distribution<int> pick_same(0, static_cast<int>(pool.size()) - 1);
    for (int i = 1; i < n; ++i) sub[i] = pool[pick_same(rng)];
    batch.push_back(std::move(sub));
  }
  return batch;
}

}  // namespace toporel
