#pragma once

#include <utility>
#include <vector>

#include "toporel/common.hpp"

namespace toporel {

// Sorted multiset of 0-dimensional death times; equals the MST edge lengths.
struct PersistenceDiagram0 {
  std::vector<double> deaths;  // ascending, size = point count - 1
};

struct MSTEdge {
  int i = 0;
  int j = 0;  // i < j
  double length = 0.0;
};

// Weight assigned to a (birth, death) pair of the diagram. `length` is
// l(a, b) = b - a; `monotone` is l_F(a, b) = F(b) - F(a) with F given as a
// strictly increasing breakpoint table evaluated by linear interpolation
// (end segments extrapolate linearly).
struct LifespanWeight {
  enum class Kind { length, monotone };
  Kind kind = Kind::length;
  std::vector<std::pair<double, double>> table;  // (x, F(x)), strictly increasing in both

  static LifespanWeight length_weight();
  static LifespanWeight monotone(std::vector<std::pair<double, double>> table);

  double evaluate_f(double x) const;
  double operator()(double birth, double death) const;
};

Matrix pairwise_distances(const LatentBatch& points);

std::vector<std::vector<int>> truncation_graph(const LatentBatch& points, double epsilon);
std::vector<std::vector<int>> connected_components_at(const LatentBatch& points, double epsilon);

// Kruskal with union-find (path compression + union by rank). Equal-length
// edges are ordered by (i, j) lexicographically so the tree is deterministic.
std::vector<MSTEdge> minimum_spanning_tree(const LatentBatch& points);
PersistenceDiagram0 death_times(const LatentBatch& points);

double densification_loss(const std::vector<LatentBatch>& points_by_class, double beta);
std::vector<Matrix> densification_loss_gradient(const std::vector<LatentBatch>& points_by_class,
                                                double beta);
double generalized_loss(const std::vector<LatentBatch>& points_by_class, double beta,
                        const LifespanWeight& weight);

// Equal-width bins over [0, max(values)]; the last bin is right-closed.
struct Histogram {
  std::vector<double> bin_left;
  std::vector<double> bin_right;
  std::vector<std::int64_t> count;
};

Histogram histogram(const std::vector<double>& values, int bins);

}  // namespace toporel
