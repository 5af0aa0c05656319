#include "toporel/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace toporel {

namespace {

constexpr double kDegenerateEdgeThreshold = 1e-12;

struct UnionFind {
  std::vector<int> parent;
  std::vector<int> rank;

  explicit UnionFind(int n) : parent(n), rank(n, 0) {
    std::iota(parent.begin(), parent.end(), 0);
  }

  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];  // path compression (halving)
      x = parent[x];
    }
    return x;
  }

  bool unite(int a, int b) {
    int ra = find(a), rb = find(b);
    if (ra == rb) return false;
    if (rank[ra] < rank[rb]) std::swap(ra, rb);
    parent[rb] = ra;
    if (rank[ra] == rank[rb]) ++rank[ra];
    return true;
  }
};

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0)) {
    throw NonPositiveEpsilon("epsilon must be > 0, got " + std::to_string(epsilon));
  }
}

}  // namespace

LifespanWeight LifespanWeight::length_weight() { return LifespanWeight{}; }

LifespanWeight LifespanWeight::monotone(std::vector<std::pair<double, double>> table) {
  if (table.size() < 2) {
    throw NonMonotoneTable("monotone weight needs at least 2 breakpoints");
  }
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (!(table[i].first > table[i - 1].first) || !(table[i].second > table[i - 1].second)) {
      throw NonMonotoneTable("breakpoint table must be strictly increasing in both coordinates");
    }
  }
  LifespanWeight w;
  w.kind = Kind::monotone;
  w.table = std::move(table);
  return w;
}

double LifespanWeight::evaluate_f(double x) const {
  if (kind == Kind::length) return x;
  std::size_t hi = 1;
  while (hi + 1 < table.size() && table[hi].first < x) ++hi;
  const auto& [x0, y0] = table[hi - 1];
  const auto& [x1, y1] = table[hi];
  return y0 + (x - x0) * (y1 - y0) / (x1 - x0);
}

double LifespanWeight::operator()(double birth, double death) const {
  if (kind == Kind::length) return death - birth;
  return evaluate_f(death) - evaluate_f(birth);
}

Matrix pairwise_distances(const LatentBatch& points) {
  const Eigen::Index n = points.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dij = (points.row(i) - points.row(j)).norm();
      d(i, j) = dij;
      d(j, i) = dij;  // assigned from the same value: symmetric to the bit
    }
  }
  return d;
}

std::vector<std::vector<int>> truncation_graph(const LatentBatch& points, double epsilon) {
  check_epsilon(epsilon);
  const int n = static_cast<int>(points.rows());
  const Matrix d = pairwise_distances(points);
  std::vector<std::vector<int>> adjacency(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (d(i, j) < epsilon) {  // strict, per the truncation-graph definition
        adjacency[i].push_back(j);
        adjacency[j].push_back(i);
      }
    }
  }
  return adjacency;
}

std::vector<std::vector<int>> connected_components_at(const LatentBatch& points, double epsilon) {
  check_epsilon(epsilon);
  const int n = static_cast<int>(points.rows());
  const Matrix d = pairwise_distances(points);
  UnionFind uf(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (d(i, j) < epsilon) uf.unite(i, j);
    }
  }
  std::vector<std::vector<int>> by_root(n);
  for (int i = 0; i < n; ++i) by_root[uf.find(i)].push_back(i);
  std::vector<std::vector<int>> components;
  for (auto& members : by_root) {
    if (!members.empty()) components.push_back(std::move(members));
  }
  // canonical order: by smallest member (members are already ascending)
  std::sort(components.begin(), components.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return components;
}

std::vector<MSTEdge> minimum_spanning_tree(const LatentBatch& points) {
  const int n = static_cast<int>(points.rows());
  if (n < 2) {
    throw TooFewPoints("minimum_spanning_tree: need at least 2 points, got " + std::to_string(n));
  }
  const Matrix d = pairwise_distances(points);
  std::vector<MSTEdge> edges;
  edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      edges.push_back({i, j, d(i, j)});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const MSTEdge& a, const MSTEdge& b) {
    if (a.length != b.length) return a.length < b.length;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  UnionFind uf(n);
  std::vector<MSTEdge> tree;
  tree.reserve(n - 1);
  for (const MSTEdge& e : edges) {
    if (uf.unite(e.i, e.j)) {
      tree.push_back(e);
      if (static_cast<int>(tree.size()) == n - 1) break;
    }
  }
  return tree;
}

PersistenceDiagram0 death_times(const LatentBatch& points) {
  PersistenceDiagram0 diagram;
  for (const MSTEdge& e : minimum_spanning_tree(points)) {
    diagram.deaths.push_back(e.length);
  }
  std::sort(diagram.deaths.begin(), diagram.deaths.end());
  return diagram;
}

double generalized_loss(const std::vector<LatentBatch>& points_by_class, double beta,
                        const LifespanWeight& weight) {
  if (!(beta > 0.0)) {
    throw BadConfig("densification loss: beta must be > 0");
  }
  double loss = 0.0;
  for (std::size_t c = 0; c < points_by_class.size(); ++c) {
    if (points_by_class[c].rows() < 2) {
      throw ClassTooSmall("densification loss: class " + std::to_string(c) +
                          " has fewer than 2 points");
    }
    for (double death : death_times(points_by_class[c]).deaths) {
      loss += std::abs(weight(0.0, death) - beta);  // 0-dim: all births are 0
    }
  }
  return loss;
}

double densification_loss(const std::vector<LatentBatch>& points_by_class, double beta) {
  return generalized_loss(points_by_class, beta, LifespanWeight::length_weight());
}

Histogram histogram(const std::vector<double>& values, int bins) {
  if (bins < 1) throw BadConfig("histogram: need at least one bin");
  Histogram h;
  double hi = 0.0;
  for (double v : values) hi = std::max(hi, v);
  if (hi <= 0.0) hi = 1.0;
  const double width = hi / bins;
  h.bin_left.resize(bins);
  h.bin_right.resize(bins);
  h.count.assign(bins, 0);
  for (int b = 0; b < bins; ++b) {
    h.bin_left[b] = b * width;
    h.bin_right[b] = (b + 1) * width;
  }
  for (double v : values) {
    int b = static_cast<int>(v / width);
    if (b >= bins) b = bins - 1;
    if (b < 0) b = 0;
    ++h.count[b];
  }
  return h;
}

std::vector<Matrix> densification_loss_gradient(const std::vector<LatentBatch>& points_by_class,
                                                double beta) {
  if (!(beta > 0.0)) {
    throw BadConfig("densification loss gradient: beta must be > 0");
  }
  std::vector<Matrix> grads;
  grads.reserve(points_by_class.size());
  for (std::size_t c = 0; c < points_by_class.size(); ++c) {
    const LatentBatch& pts = points_by_class[c];
    if (pts.rows() < 2) {
      throw ClassTooSmall("densification loss gradient: class " + std::to_string(c) +
                          " has fewer than 2 points");
    }
    Matrix g = Matrix::Zero(pts.rows(), pts.cols());
    for (const MSTEdge& e : minimum_spanning_tree(pts)) {
      if (e.length < kDegenerateEdgeThreshold) {
        throw DegenerateEdge("densification loss gradient: MST edge of length " +
                             std::to_string(e.length) + " in class " + std::to_string(c));
      }
      const double s = e.length > beta ? 1.0 : (e.length < beta ? -1.0 : 0.0);
      if (s == 0.0) continue;  // sign(0) := 0 keeps the minimum stationary
      const auto diff = (pts.row(e.i) - pts.row(e.j)) * (s / e.length);
      g.row(e.i) += diff;
      g.row(e.j) -= diff;
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

}  // namespace toporel
