#pragma once

#include <vector>

#include "toporel/common.hpp"

// Reference implementations kept deliberately separate from the production
// code paths they check: plain loops, their own union-find, no shared
// helpers. Used by the verify suites and the test binaries.
namespace toporel::oracle {

// Sweeps the sorted pairwise distances and records every component merge.
std::vector<double> death_times_sweep(const Matrix& points);

// Prim's algorithm; returns the sorted MST edge lengths.
std::vector<double> mst_lengths_prim(const Matrix& points);

// Straight-line evaluation of the robust relative representation: normalize
// z and the anchors against the batch statistics, then cosine.
std::vector<double> robust_relative_reference(const std::vector<double>& z,
                                              const std::vector<std::vector<double>>& anchors,
                                              const std::vector<std::vector<double>>& batch);

// Standard normal CDF by Simpson quadrature of the density.
double normal_cdf_quadrature(double x);

// Second independent distance routine (plain accumulation loops).
Matrix pairwise_distances_reference(const Matrix& points);

}  // namespace toporel::oracle
