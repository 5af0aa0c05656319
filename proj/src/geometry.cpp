#include "toporel/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace toporel {

namespace {

constexpr double kZeroNormThreshold = 1e-300;
constexpr double kDegenerateStdThreshold = 1e-12;

double checked_norm(const Vector& v, const char* what) {
  const double n = v.norm();
  if (n < kZeroNormThreshold) {
    throw ZeroVector(std::string(what) + " has (numerically) zero norm");
  }
  return n;
}

}  // namespace

double cosine_similarity(const Vector& z, const Vector& w) {
  if (z.size() != w.size()) {
    throw DimensionMismatch("cosine_similarity: vectors of size " + std::to_string(z.size()) +
                            " and " + std::to_string(w.size()));
  }
  const double nz = checked_norm(z, "cosine_similarity: first argument");
  const double nw = checked_norm(w, "cosine_similarity: second argument");
  const double sim = z.dot(w) / (nz * nw);
  return std::clamp(sim, -1.0, 1.0);
}

Vector relative_transform(const Vector& z, const AnchorSet& anchors) {
  if (z.size() != anchors.dim()) {
    throw DimensionMismatch("relative_transform: vector dim " + std::to_string(z.size()) +
                            " vs anchor dim " + std::to_string(anchors.dim()));
  }
  Vector out(anchors.count());
  for (int i = 0; i < anchors.count(); ++i) {
    out[i] = cosine_similarity(z, Vector(anchors.anchors.row(i).transpose()));
  }
  return out;
}

Matrix relative_transform(const LatentBatch& batch, const AnchorSet& anchors) {
  if (batch.cols() != anchors.dim()) {
    throw DimensionMismatch("relative_transform: batch dim " + std::to_string(batch.cols()) +
                            " vs anchor dim " + std::to_string(anchors.dim()));
  }
  Matrix out(batch.rows(), anchors.count());
  for (Eigen::Index r = 0; r < batch.rows(); ++r) {
    out.row(r) = relative_transform(Vector(batch.row(r).transpose()), anchors).transpose();
  }
  return out;
}

BatchStats batch_stats(const LatentBatch& batch) {
  if (batch.rows() < 2) {
    throw DegenerateBatch("batch_stats: need at least 2 rows, got " +
                          std::to_string(batch.rows()));
  }
  BatchStats s;
  s.mean = batch.colwise().mean().transpose();
  Vector var = Vector::Zero(batch.cols());
  for (Eigen::Index r = 0; r < batch.rows(); ++r) {
    Vector d = batch.row(r).transpose() - s.mean;
    var += d.cwiseProduct(d);
  }
  var /= static_cast<double>(batch.rows());
  s.std = var.cwiseSqrt();
  for (Eigen::Index c = 0; c < s.std.size(); ++c) {
    if (s.std[c] < kDegenerateStdThreshold) {
      throw DegenerateBatch("batch_stats: column " + std::to_string(c) +
                            " has vanishing standard deviation");
    }
  }
  return s;
}

Vector gaussian_normalize(const Vector& z, const BatchStats& stats) {
  if (z.size() != stats.mean.size()) {
    throw DimensionMismatch("gaussian_normalize: vector dim " + std::to_string(z.size()) +
                            " vs stats dim " + std::to_string(stats.mean.size()));
  }
  return (z - stats.mean).cwiseQuotient(stats.std);
}

Vector gaussian_denormalize(const Vector& z, const BatchStats& stats) {
  if (z.size() != stats.mean.size()) {
    throw DimensionMismatch("gaussian_denormalize: vector dim " + std::to_string(z.size()) +
                            " vs stats dim " + std::to_string(stats.mean.size()));
  }
  return z.cwiseProduct(stats.std) + stats.mean;
}

LatentBatch gaussian_normalize(const LatentBatch& batch, const BatchStats& stats) {
  if (batch.cols() != stats.mean.size()) {
    throw DimensionMismatch("gaussian_normalize: batch dim " + std::to_string(batch.cols()) +
                            " vs stats dim " + std::to_string(stats.mean.size()));
  }
  LatentBatch out(batch.rows(), batch.cols());
  for (Eigen::Index r = 0; r < batch.rows(); ++r) {
    out.row(r) = (batch.row(r).transpose() - stats.mean).cwiseQuotient(stats.std).transpose();
  }
  return out;
}

Vector robust_relative_transform(const Vector& z, const AnchorSet& anchors,
                                 const BatchStats& stats) {
  AnchorSet normalized;
  normalized.anchors = gaussian_normalize(anchors.anchors, stats);
  normalized.ids = anchors.ids;
  return relative_transform(gaussian_normalize(z, stats), normalized);
}

Matrix robust_relative_transform(const LatentBatch& batch, const AnchorSet& anchors,
                                 const BatchStats& stats) {
  AnchorSet normalized;
  normalized.anchors = gaussian_normalize(anchors.anchors, stats);
  normalized.ids = anchors.ids;
  return relative_transform(gaussian_normalize(batch, stats), normalized);
}

ScaledPermutation identity_scaled_permutation(int m) {
  ScaledPermutation g;
  g.perm.resize(m);
  std::iota(g.perm.begin(), g.perm.end(), 0);
  g.scale = Vector::Ones(m);
  g.shift = Vector::Zero(m);
  return g;
}

ScaledPermutation inverse(const ScaledPermutation& g) {
  const int m = g.dim();
  ScaledPermutation inv;
  inv.perm.resize(m);
  inv.scale = Vector(m);
  inv.shift = Vector(m);
  std::vector<int> perm_inv(m);
  for (int i = 0; i < m; ++i) perm_inv[g.perm[i]] = i;
  for (int i = 0; i < m; ++i) {
    const int j = perm_inv[i];  // g.perm[j] == i
    inv.perm[i] = j;
    inv.scale[i] = 1.0 / g.scale[j];
    inv.shift[i] = -g.shift[j] / g.scale[j];
  }
  return inv;
}

ScaledPermutation compose(const ScaledPermutation& outer, const ScaledPermutation& inner) {
  if (outer.dim() != inner.dim()) {
    throw DimensionMismatch("compose: mismatched ScaledPermutation dims");
  }
  const int m = outer.dim();
  ScaledPermutation g;
  g.perm.resize(m);
  g.scale = Vector(m);
  g.shift = Vector(m);
  for (int i = 0; i < m; ++i) {
    const int j = outer.perm[i];
    g.perm[i] = inner.perm[j];
    g.scale[i] = outer.scale[i] * inner.scale[j];
    g.shift[i] = outer.scale[i] * inner.shift[j] + outer.shift[i];
  }
  return g;
}

Matrix linear_matrix(const ScaledPermutation& g) {
  const int m = g.dim();
  Matrix a = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) a(i, g.perm[i]) = g.scale[i];
  return a;
}

Vector apply_scaled_permutation(const Vector& z, const ScaledPermutation& g) {
  if (z.size() != g.dim()) {
    throw DimensionMismatch("apply_scaled_permutation: vector dim " + std::to_string(z.size()) +
                            " vs element dim " + std::to_string(g.dim()));
  }
  Vector out(g.dim());
  for (int i = 0; i < g.dim(); ++i) out[i] = g.scale[i] * z[g.perm[i]] + g.shift[i];
  return out;
}

LatentBatch apply_scaled_permutation(const LatentBatch& batch, const ScaledPermutation& g) {
  if (batch.cols() != g.dim()) {
    throw DimensionMismatch("apply_scaled_permutation: batch dim " + std::to_string(batch.cols()) +
                            " vs element dim " + std::to_string(g.dim()));
  }
  LatentBatch out(batch.rows(), batch.cols());
  for (Eigen::Index r = 0; r < batch.rows(); ++r) {
    out.row(r) = apply_scaled_permutation(Vector(batch.row(r).transpose()), g).transpose();
  }
  return out;
}

AnchorSet apply_scaled_permutation(const AnchorSet& anchors, const ScaledPermutation& g) {
  AnchorSet out;
  out.anchors = apply_scaled_permutation(static_cast<const LatentBatch&>(anchors.anchors), g);
  out.ids = anchors.ids;
  return out;
}

BatchStats apply_scaled_permutation(const BatchStats& stats, const ScaledPermutation& g) {
  if (stats.mean.size() != g.dim()) {
    throw DimensionMismatch("apply_scaled_permutation: stats dim vs element dim");
  }
  BatchStats out;
  out.mean = apply_scaled_permutation(stats.mean, g);
  out.std = Vector(g.dim());
  for (int i = 0; i < g.dim(); ++i) {
    out.std[i] = std::abs(g.scale[i]) * stats.std[g.perm[i]];
  }
  return out;
}

ScaledPermutation random_scaled_permutation(int m, Rng& rng, double scale_min, double scale_max,
                                            double shift_sigma) {
  ScaledPermutation g = identity_scaled_permutation(m);
  // Fisher-Yates
  for (int i = m - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(g.perm[i], g.perm[pick(rng)]);
  }
  std::uniform_real_distribution<double> log_scale(std::log(scale_min), std::log(scale_max));
  std::normal_distribution<double> shift(0.0, shift_sigma);
  for (int i = 0; i < m; ++i) {
    g.scale[i] = std::exp(log_scale(rng));
    g.shift[i] = shift(rng);
  }
  return g;
}

}  // namespace toporel
