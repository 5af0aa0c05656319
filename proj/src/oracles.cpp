#include "toporel/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace toporel::oracle {

namespace {

struct SimpleDsu {
  std::vector<int> root;

  explicit SimpleDsu(int n) : root(n) { std::iota(root.begin(), root.end(), 0); }

  int find(int x) const {
    while (root[x] != x) x = root[x];
    return x;
  }

  void merge(int a, int b) { root[find(a)] = find(b); }
};

double euclidean(const Matrix& points, int i, int j) {
  double sum = 0.0;
  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    const double d = points(i, c) - points(j, c);
    sum += d * d;
  }
  return std::sqrt(sum);
}

}  // namespace

std::vector<double> death_times_sweep(const Matrix& points) {
  const int n = static_cast<int>(points.rows());
  struct Pair {
    int i, j;
    double d;
  };
  std::vector<Pair> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pairs.push_back({i, j, euclidean(points, i, j)});
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  SimpleDsu dsu(n);
  std::vector<double> deaths;
  for (const Pair& p : pairs) {
    if (dsu.find(p.i) != dsu.find(p.j)) {
      dsu.merge(p.i, p.j);
      deaths.push_back(p.d);
    }
  }
  return deaths;
}

std::vector<double> mst_lengths_prim(const Matrix& points) {
  const int n = static_cast<int>(points.rows());
  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  in_tree[0] = true;
  for (int j = 1; j < n; ++j) best[j] = euclidean(points, 0, j);
  std::vector<double> lengths;
  for (int added = 1; added < n; ++added) {
    int next = -1;
    for (int j = 0; j < n; ++j) {
      if (!in_tree[j] && (next == -1 || best[j] < best[next])) next = j;
    }
    lengths.push_back(best[next]);
    in_tree[next] = true;
    for (int j = 0; j < n; ++j) {
      if (!in_tree[j]) best[j] = std::min(best[j], euclidean(points, next, j));
    }
  }
  std::sort(lengths.begin(), lengths.end());
  return lengths;
}

std::vector<double> robust_relative_reference(const std::vector<double>& z,
                                              const std::vector<std::vector<double>>& anchors,
                                              const std::vector<std::vector<double>>& batch) {
  const std::size_t m = z.size();
  const std::size_t n = batch.size();
  std::vector<double> mean(m, 0.0), sd(m, 0.0);
  for (const auto& row : batch) {
    for (std::size_t c = 0; c < m; ++c) mean[c] += row[c];
  }
  for (std::size_t c = 0; c < m; ++c) mean[c] /= static_cast<double>(n);
  for (const auto& row : batch) {
    for (std::size_t c = 0; c < m; ++c) {
      sd[c] += (row[c] - mean[c]) * (row[c] - mean[c]);
    }
  }
  for (std::size_t c = 0; c < m; ++c) sd[c] = std::sqrt(sd[c] / static_cast<double>(n));

  std::vector<double> z_hat(m);
  for (std::size_t c = 0; c < m; ++c) z_hat[c] = (z[c] - mean[c]) / sd[c];
  double z_norm = 0.0;
  for (double v : z_hat) z_norm += v * v;
  z_norm = std::sqrt(z_norm);

  std::vector<double> out;
  for (const auto& anchor : anchors) {
    double dot = 0.0, a_norm = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const double a_hat = (anchor[c] - mean[c]) / sd[c];
      dot += a_hat * z_hat[c];
      a_norm += a_hat * a_hat;
    }
    out.push_back(dot / (std::sqrt(a_norm) * z_norm));
  }
  return out;
}

double normal_cdf_quadrature(double x) {
  // Phi(x) = 0.5 + integral of the density over [0, x], Simpson's rule.
  const int steps = 20000;  // even
  const double h = x / steps;
  auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); };
  double sum = pdf(0.0) + pdf(x);
  for (int i = 1; i < steps; ++i) {
    sum += pdf(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return 0.5 + sum * h / 3.0;
}

Matrix pairwise_distances_reference(const Matrix& points) {
  const int n = static_cast<int>(points.rows());
  Matrix d = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) d(i, j) = euclidean(points, i, j);
    }
  }
  return d;
}

}  // namespace toporel::oracle
