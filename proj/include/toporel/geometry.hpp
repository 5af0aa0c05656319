#pragma once

#include <cstdint>
#include <vector>

#include "toporel/common.hpp"

namespace toporel {

// Ordered anchor set; ordering is part of the identity, cross-domain
// correspondence is positional.
struct AnchorSet {
  Matrix anchors;            // k x m, one anchor per row
  std::vector<int> ids;      // k unique identifiers (sample indices)

  int count() const { return static_cast<int>(anchors.rows()); }
  int dim() const { return static_cast<int>(anchors.cols()); }
};

struct BatchStats {
  Vector mean;
  Vector std;  // per-component population standard deviation, all > 0
};

// z -> D P z + h, stored so that out[i] = scale[i] * z[perm[i]] + shift[i].
struct ScaledPermutation {
  std::vector<int> perm;
  Vector scale;
  Vector shift;

  int dim() const { return static_cast<int>(perm.size()); }
};

double cosine_similarity(const Vector& z, const Vector& w);

Vector relative_transform(const Vector& z, const AnchorSet& anchors);
Matrix relative_transform(const LatentBatch& batch, const AnchorSet& anchors);

BatchStats batch_stats(const LatentBatch& batch);

Vector gaussian_normalize(const Vector& z, const BatchStats& stats);
Vector gaussian_denormalize(const Vector& z, const BatchStats& stats);
LatentBatch gaussian_normalize(const LatentBatch& batch, const BatchStats& stats);

Vector robust_relative_transform(const Vector& z, const AnchorSet& anchors,
                                 const BatchStats& stats);
Matrix robust_relative_transform(const LatentBatch& batch, const AnchorSet& anchors,
                                 const BatchStats& stats);

ScaledPermutation identity_scaled_permutation(int m);
ScaledPermutation inverse(const ScaledPermutation& g);
// outer(inner(z)) as a single element.
ScaledPermutation compose(const ScaledPermutation& outer, const ScaledPermutation& inner);
Matrix linear_matrix(const ScaledPermutation& g);  // dense D*P, shift ignored

Vector apply_scaled_permutation(const Vector& z, const ScaledPermutation& g);
LatentBatch apply_scaled_permutation(const LatentBatch& batch, const ScaledPermutation& g);
AnchorSet apply_scaled_permutation(const AnchorSet& anchors, const ScaledPermutation& g);
// Image of the stats under z -> DPz + h: mean' = DP mean + h, std'[i] = |scale[i]| * std[perm[i]].
BatchStats apply_scaled_permutation(const BatchStats& stats, const ScaledPermutation& g);

ScaledPermutation random_scaled_permutation(int m, Rng& rng, double scale_min = 0.1,
                                            double scale_max = 10.0, double shift_sigma = 1.0);

}  // namespace toporel
