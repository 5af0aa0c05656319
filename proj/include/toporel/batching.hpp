#pragma once

#include <cstdint>
#include <vector>

#include "toporel/common.hpp"

namespace toporel {

struct Dataset {
  Matrix inputs;            // one sample per row
  std::vector<int> labels;  // values in [0, num_classes)
  int num_classes = 0;

  int size() const { return static_cast<int>(inputs.rows()); }
  int dim() const { return static_cast<int>(inputs.cols()); }
};

struct ClassPartition {
  std::vector<std::vector<int>> by_class;  // index lists, stable (ascending)

  int num_classes() const { return static_cast<int>(by_class.size()); }
};

ClassPartition partition_by_class(const std::vector<int>& labels);

// K class sub-batches plus one standard sub-batch (last entry), all of size n.
struct TopoBatch {
  std::vector<std::vector<int>> sub_batches;
  int n = 0;

  int num_classes() const { return static_cast<int>(sub_batches.size()) - 1; }
  const std::vector<int>& standard_sub_batch() const { return sub_batches.back(); }
};

// The K+1 dataloader: class sub-batches sampled with replacement from the
// class pools, the standard sub-batch drawn without replacement from an
// epoch-cycling shuffle of the full dataset.
class TopoBatchLoader {
 public:
  TopoBatchLoader(const ClassPartition& partition, int dataset_size, int n, std::uint64_t seed);

  TopoBatch next();
  int batches_per_epoch() const { return batches_per_epoch_; }
  std::int64_t batches_served() const { return batches_served_; }
  // How many times each dataset index has been emitted through the standard
  // sub-batch; after one epoch every count equals 1.
  const std::vector<std::int64_t>& standard_touch_counts() const { return touch_counts_; }

 private:
  void reshuffle();

  ClassPartition partition_;
  int dataset_size_;
  int n_;
  int batches_per_epoch_;
  Rng rng_;
  std::vector<int> order_;
  std::size_t cursor_ = 0;
  std::int64_t batches_served_ = 0;
  std::vector<std::int64_t> touch_counts_;
};

// The original densification dataloader: b anchor samples drawn from the
// dataset, each expanded with n-1 same-class draws (with replacement).
std::vector<std::vector<int>> build_original_batch(const ClassPartition& partition,
                                                   const std::vector<int>& labels, int b, int n,
                                                   Rng& rng);

}  // namespace toporel
