#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "toporel/oracles.hpp"
#include "toporel/topology.hpp"

using namespace toporel;

namespace {

Matrix line_points(std::initializer_list<double> xs) {
  Matrix m(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) m(i++, 0) = x;
  return m;
}

Matrix random_points(int n, int dim, Rng& rng, double scale = 2.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(n, dim);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < dim; ++c) m(r, c) = normal(rng);
  }
  return m;
}

}  // namespace

TEST_CASE("pairwise distances") {
  const Matrix d = pairwise_distances(line_points({0, 3}));
  CHECK(d(0, 0) == 0.0);
  CHECK(d(0, 1) == doctest::Approx(3.0));
  CHECK(d(1, 0) == doctest::Approx(3.0));

  const Matrix single = pairwise_distances(line_points({4}));
  CHECK(single.rows() == 1);
  CHECK(single(0, 0) == 0.0);

  Rng rng(12);
  const Matrix pts = random_points(10, 3, rng);
  const Matrix mine = pairwise_distances(pts);
  const Matrix ref = oracle::pairwise_distances_reference(pts);
  CHECK((mine - ref).cwiseAbs().maxCoeff() < 1e-14);
  // symmetric to the bit
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) CHECK(mine(i, j) == mine(j, i));
  }
}

TEST_CASE("truncation graph uses a strict inequality") {
  const Matrix pts = line_points({0, 1, 3});
  CHECK_THROWS_AS(truncation_graph(pts, 0.0), NonPositiveEpsilon);
  CHECK_THROWS_AS(truncation_graph(pts, -1.0), NonPositiveEpsilon);

  auto edge_count = [](const std::vector<std::vector<int>>& adj) {
    std::size_t total = 0;
    for (const auto& nbrs : adj) total += nbrs.size();
    return total / 2;
  };
  CHECK(edge_count(truncation_graph(pts, 1.0)) == 0);  // d = 1 is not < 1
  CHECK(edge_count(truncation_graph(pts, 1.5)) == 1);
  CHECK(edge_count(truncation_graph(pts, 10.0)) == 3);
}

TEST_CASE("connected components at a scale") {
  const Matrix pts = line_points({0, 1, 3});
  const auto comps = connected_components_at(pts, 1.5);
  REQUIRE(comps.size() == 2);
  CHECK(comps[0] == std::vector<int>{0, 1});
  CHECK(comps[1] == std::vector<int>{2});

  const auto tiny = connected_components_at(pts, 1e-12);
  CHECK(tiny.size() == 3);  // every point its own component as epsilon -> 0
}

TEST_CASE("components refine as epsilon shrinks") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix pts = random_points(2 + static_cast<int>(rng() % 14), 2, rng);
    std::uniform_real_distribution<double> eps_dist(0.1, 4.0);
    double eps = eps_dist(rng), delta = eps_dist(rng);
    if (eps > delta) std::swap(eps, delta);
    const auto fine = connected_components_at(pts, eps);
    const auto coarse = connected_components_at(pts, delta);
    // brute-force refinement check: every fine component sits inside one
    // coarse component
    std::vector<int> coarse_id(pts.rows());
    for (std::size_t c = 0; c < coarse.size(); ++c) {
      for (int idx : coarse[c]) coarse_id[idx] = static_cast<int>(c);
    }
    for (const auto& comp : fine) {
      for (int idx : comp) CHECK(coarse_id[idx] == coarse_id[comp.front()]);
    }
  }
}

TEST_CASE("death times on a line") {
  const PersistenceDiagram0 d = death_times(line_points({0, 1, 3}));
  REQUIRE(d.deaths.size() == 2);
  CHECK(d.deaths[0] == doctest::Approx(1.0));
  CHECK(d.deaths[1] == doctest::Approx(2.0));
  CHECK_THROWS_AS(death_times(line_points({5})), TooFewPoints);
}

TEST_CASE("coincident points die at zero with multiplicity") {
  Matrix pts(4, 2);
  pts << 1, 1, 1, 1, 1, 1, 1, 1;
  const PersistenceDiagram0 d = death_times(pts);
  REQUIRE(d.deaths.size() == 3);
  for (double death : d.deaths) CHECK(death == 0.0);
}

TEST_CASE("death times match the sweep oracle") {
  Rng rng(123);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 29);
    const int m = 1 + static_cast<int>(rng() % 8);
    Matrix pts = random_points(n, m, rng);
    if (trial % 7 == 0 && n >= 3) pts.row(2) = pts.row(0);
    const auto mine = death_times(pts).deaths;
    const auto sweep = oracle::death_times_sweep(pts);
    REQUIRE(mine.size() == sweep.size());
    for (std::size_t i = 0; i < mine.size(); ++i) {
      CHECK(std::abs(mine[i] - sweep[i]) <= 1e-12);
    }
  }
}

TEST_CASE("death times are rigid-motion invariant and scale linearly") {
  Rng rng(321);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 10);
    const Matrix pts = random_points(n, 3, rng);
    const auto base = death_times(pts).deaths;

    // random rotation via QR, plus a translation and a permutation of rows
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd raw(3, 3);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) raw(r, c) = normal(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    const Eigen::MatrixXd q = qr.householderQ();
    Matrix moved = Matrix((Eigen::MatrixXd(pts) * q.transpose()));
    const Vector shift = Vector::Ones(3) * 2.5;
    moved.rowwise() += shift.transpose();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<int> pick(0, i);
      std::swap(order[i], order[pick(rng)]);
    }
    Matrix permuted(n, 3);
    for (int i = 0; i < n; ++i) permuted.row(i) = moved.row(order[i]);

    const auto rigid = death_times(permuted).deaths;
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK(std::abs(base[i] - rigid[i]) <= 1e-12);
    }

    const double alpha = 3.25;
    const auto scaled = death_times(Matrix(alpha * pts)).deaths;
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK(std::abs(alpha * base[i] - scaled[i]) <= 1e-12);
    }
  }
}

TEST_CASE("total MST length agrees with Prim") {
  Rng rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 20);
    Matrix pts = random_points(n, 2, rng);
    if (trial % 9 == 0 && n >= 4) {
      pts.row(1) = pts.row(0);  // ties: edge sets may differ, lengths must not
      pts.row(3) = pts.row(2);
    }
    const auto kruskal = death_times(pts).deaths;
    const auto prim = oracle::mst_lengths_prim(pts);
    REQUIRE(kruskal.size() == prim.size());
    double total_k = 0, total_p = 0;
    for (std::size_t i = 0; i < kruskal.size(); ++i) {
      total_k += kruskal[i];
      total_p += prim[i];
      CHECK(std::abs(kruskal[i] - prim[i]) <= 1e-12);
    }
    CHECK(std::abs(total_k - total_p) <= 1e-12);
  }
}

TEST_CASE("densification loss on a line") {
  const std::vector<LatentBatch> classes = {line_points({0, 1, 3})};
  CHECK(densification_loss(classes, 1.5) == doctest::Approx(1.0));
  CHECK_THROWS_AS(densification_loss({line_points({5})}, 1.5), ClassTooSmall);
  CHECK_THROWS_AS(densification_loss(classes, 0.0), BadConfig);
}

TEST_CASE("densification loss vanishes only when every edge sits at beta") {
  const double beta = 3.0;
  const std::vector<LatentBatch> at_beta = {line_points({0, 3, 6})};
  CHECK(densification_loss(at_beta, beta) == doctest::Approx(0.0));

  Rng rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    const std::vector<LatentBatch> classes = {random_points(8, 2, rng)};
    const double loss = densification_loss(classes, beta);
    CHECK(loss >= 0.0);
    bool all_at_beta = true;
    for (double d : death_times(classes[0]).deaths) {
      if (std::abs(d - beta) > 1e-12) all_at_beta = false;
    }
    if (!all_at_beta) CHECK(loss > 0.0);
  }
}

TEST_CASE("two-class loss composed from the sweep oracle") {
  Rng rng(246);
  const std::vector<LatentBatch> classes = {random_points(9, 3, rng), random_points(7, 3, rng)};
  const double beta = 1.3;
  double expected = 0.0;
  for (const auto& pts : classes) {
    for (double death : oracle::death_times_sweep(pts)) expected += std::abs(death - beta);
  }
  CHECK(densification_loss(classes, beta) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gradient vanishes when all edges are at beta") {
  const std::vector<LatentBatch> classes = {line_points({0, 3, 6})};
  const auto grads = densification_loss_gradient(classes, 3.0);
  CHECK(grads[0].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradient matches central differences on the line example") {
  std::vector<LatentBatch> classes = {line_points({0, 1, 3})};
  const double beta = 1.5;
  const auto analytic = densification_loss_gradient(classes, beta);
  const double h = 1e-6;
  for (int r = 0; r < 3; ++r) {
    const double orig = classes[0](r, 0);
    classes[0](r, 0) = orig + h;
    const double up = densification_loss(classes, beta);
    classes[0](r, 0) = orig - h;
    const double down = densification_loss(classes, beta);
    classes[0](r, 0) = orig;
    const double fd = (up - down) / (2 * h);
    CHECK(analytic[0](r, 0) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("gradient rejects degenerate edges") {
  Matrix pts(3, 2);
  pts << 1, 1, 1, 1, 4, 4;
  CHECK_THROWS_AS(densification_loss_gradient({pts}, 1.0), DegenerateEdge);
}

TEST_CASE("gradient descent on raw points densifies a class") {
  Rng rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix pts(20, 2);
  for (int i = 0; i < 20; ++i) {
    pts(i, 0) = unit(rng);
    pts(i, 1) = unit(rng);
  }
  const double beta = 0.5;
  auto mean_death = [&](const Matrix& p) {
    double total = 0;
    const auto deaths = death_times(p).deaths;
    for (double d : deaths) total += d;
    return total / static_cast<double>(deaths.size());
  };
  const double initial_gap = std::abs(mean_death(pts) - beta);
  double loss = densification_loss({pts}, beta);
  double step = 1e-2;
  int accepted = 0;
  for (int it = 0; it < 200; ++it) {
    const auto grad = densification_loss_gradient({pts}, beta);
    Matrix candidate = pts - step * grad[0];
    double candidate_loss = densification_loss({candidate}, beta);
    int halvings = 0;
    while (candidate_loss >= loss && halvings < 30) {
      step *= 0.5;
      candidate = pts - step * grad[0];
      candidate_loss = densification_loss({candidate}, beta);
      ++halvings;
    }
    if (candidate_loss >= loss) break;
    CHECK(candidate_loss < loss);  // strict decrease on every accepted step
    pts = candidate;
    loss = candidate_loss;
    ++accepted;
  }
  CHECK(accepted > 50);
  CHECK(std::abs(mean_death(pts) - beta) < initial_gap);
}

TEST_CASE("generalized loss reduces to the plain loss bitwise") {
  Rng rng(13);
  const LifespanWeight length = LifespanWeight::length_weight();
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<LatentBatch> classes = {random_points(6, 2, rng),
                                              random_points(5, 3, rng)};
    const double beta = 0.5 + 0.1 * trial;
    CHECK(generalized_loss(classes, beta, length) == densification_loss(classes, beta));
  }
}

TEST_CASE("generalized loss with a doubling table") {
  const LifespanWeight w = LifespanWeight::monotone({{0.0, 0.0}, {10.0, 20.0}});
  CHECK(generalized_loss({line_points({0, 1, 3})}, 3.0, w) == doctest::Approx(2.0));
}

TEST_CASE("monotone table validation") {
  CHECK_THROWS_AS(LifespanWeight::monotone({{0.0, 0.0}}), NonMonotoneTable);
  CHECK_THROWS_AS(LifespanWeight::monotone({{0.0, 0.0}, {1.0, 0.0}}), NonMonotoneTable);
  CHECK_THROWS_AS(LifespanWeight::monotone({{1.0, 0.0}, {0.0, 1.0}}), NonMonotoneTable);
}

TEST_CASE("generalized loss ignores point order within a class") {
  Rng rng(64);
  const LifespanWeight w = LifespanWeight::monotone({{0.0, 0.0}, {1.0, 2.0}, {10.0, 30.0}});
  const Matrix pts = random_points(10, 2, rng);
  Matrix shuffled = pts;
  std::vector<int> order(10);
  std::iota(order.begin(), order.end(), 0);
  for (int i = 9; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(order[i], order[pick(rng)]);
  }
  for (int i = 0; i < 10; ++i) shuffled.row(i) = pts.row(order[i]);
  CHECK(generalized_loss({pts}, 2.0, w) ==
        doctest::Approx(generalized_loss({shuffled}, 2.0, w)).epsilon(1e-12));
}

TEST_CASE("histogram bins cover the death range") {
  const std::vector<double> deaths = {0.1, 0.4, 0.9, 1.0};
  const Histogram h = histogram(deaths, 4);
  REQUIRE(h.count.size() == 4);
  std::int64_t total = 0;
  for (auto c : h.count) total += c;
  CHECK(total == 4);
  CHECK(h.bin_left.front() == 0.0);
  CHECK(h.bin_right.back() == doctest::Approx(1.0));
}
