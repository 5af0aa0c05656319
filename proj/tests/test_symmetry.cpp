#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "toporel/oracles.hpp"
#include "toporel/symmetry.hpp"

using namespace toporel;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = normal(rng);
  }
  return m;
}

Vector random_vector(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

}  // namespace

TEST_CASE("activation values") {
  Vector x(3);
  x << -1, 0, 2;
  const Vector r = activation_apply(Activation::relu, x);
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 0.0);
  CHECK(r[2] == 2.0);

  CHECK(activation_apply(Activation::sigmoid, 0.0) == doctest::Approx(0.5));
  CHECK(activation_apply(Activation::identity, -3.5) == -3.5);

  // gelu(1) = Phi(1), checked against an independent quadrature of the
  // normal density
  const double expected = 1.0 * oracle::normal_cdf_quadrature(1.0);
  CHECK(activation_apply(Activation::gelu, 1.0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(activation_apply(Activation::gelu, 1.0) ==
        doctest::Approx(0.8413447460685429).epsilon(1e-15));
}

TEST_CASE("activation derivatives against central differences") {
  Rng rng(21);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const double h = 1e-6;
  for (const Activation act :
       {Activation::gelu, Activation::sigmoid, Activation::identity}) {
    for (int i = 0; i < 50; ++i) {
      const double x = u(rng);
      const double fd =
          (activation_apply(act, x + h) - activation_apply(act, x - h)) / (2 * h);
      CHECK(activation_derivative(act, x) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("lambda of relu on a non-negative diagonal") {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 2;
  a(1, 1) = 3;
  const Matrix lambda = lambda_sigma(Activation::relu, a);
  CHECK((lambda - a).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("lambda of the identity activation is the matrix itself") {
  Rng rng(5);
  const Matrix a = random_matrix(4, 4, rng);
  const Matrix lambda = lambda_sigma(Activation::identity, a);
  CHECK((lambda - a).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("lambda of sigmoid on a swap is the swap") {
  Matrix p = Matrix::Zero(2, 2);
  p(0, 1) = 1;
  p(1, 0) = 1;
  const Matrix lambda = lambda_sigma(Activation::sigmoid, p);
  CHECK((lambda - p).cwiseAbs().maxCoeff() < 1e-10);

  // and the intertwining relation holds on random vectors
  Rng rng(6);
  for (int i = 0; i < 32; ++i) {
    const Vector x = random_vector(2, rng);
    const Vector lhs = activation_apply(Activation::sigmoid, Vector(p * x));
    const Vector rhs = lambda * activation_apply(Activation::sigmoid, x);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("singular sigma identity is rejected") {
  Matrix singular = Matrix::Ones(3, 3);
  CHECK_THROWS_AS(detail::solve_right_inverse(Matrix(Matrix::Identity(3, 3)), singular),
                  SingularSigmaIdentity);
}

TEST_CASE("membership check accepts and rejects the right families") {
  Rng rng(71);
  // relu admits positive scales
  CHECK_NOTHROW(random_intertwiner(Activation::relu, 6, rng));
  // gelu does not: a non-unit positive scale is not an intertwiner
  ScaledPermutation bad = identity_scaled_permutation(3);
  bad.scale[0] = 2.0;
  CHECK_THROWS_AS(make_intertwiner(Activation::gelu, bad), MembershipViolation);
  CHECK_THROWS_AS(make_intertwiner(Activation::sigmoid, bad), MembershipViolation);
  // relu rejects negative scales
  ScaledPermutation neg = identity_scaled_permutation(3);
  neg.scale[1] = -1.0;
  CHECK_THROWS_AS(make_intertwiner(Activation::relu, neg), MembershipViolation);
  // shifts are not part of the group
  ScaledPermutation shifted = identity_scaled_permutation(3);
  shifted.shift[0] = 0.5;
  CHECK_THROWS_AS(make_intertwiner(Activation::relu, shifted), MembershipViolation);
}

TEST_CASE("intertwining relation for sampled elements") {
  Rng rng(81);
  for (const Activation act : {Activation::relu, Activation::gelu, Activation::sigmoid,
                               Activation::identity}) {
    for (int trial = 0; trial < 8; ++trial) {
      const int n = 2 + static_cast<int>(rng() % 7);
      const IntertwinerElement e = random_intertwiner(act, n, rng);
      const Matrix a = linear_matrix(e.action);
      const Matrix lambda = lambda_sigma(act, a);
      for (int probe = 0; probe < 32; ++probe) {
        const Vector x = random_vector(n, rng);
        const Vector lhs = activation_apply(act, Vector(a * x));
        const Vector rhs = lambda * activation_apply(act, x);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-8);
      }
    }
  }
}

TEST_CASE("lambda is a homomorphism on sampled elements") {
  Rng rng(91);
  for (const Activation act : {Activation::relu, Activation::gelu, Activation::sigmoid}) {
    for (int trial = 0; trial < 10; ++trial) {
      const int n = 2 + static_cast<int>(rng() % 7);
      const IntertwinerElement e1 = random_intertwiner(act, n, rng);
      const IntertwinerElement e2 = random_intertwiner(act, n, rng);
      const Matrix a1 = linear_matrix(e1.action);
      const Matrix a2 = linear_matrix(e2.action);
      const Matrix lhs = lambda_sigma(act, Matrix(a1 * a2));
      const Matrix rhs = lambda_sigma(act, a1) * lambda_sigma(act, a2);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("closed-form lambda agrees with the dense formula") {
  Rng rng(101);
  for (const Activation act : {Activation::relu, Activation::gelu, Activation::sigmoid}) {
    for (int trial = 0; trial < 10; ++trial) {
      const int n = 3 + static_cast<int>(rng() % 6);
      const IntertwinerElement e = random_intertwiner(act, n, rng);
      const Matrix dense = lambda_sigma(act, linear_matrix(e.action));
      const Matrix closed = linear_matrix(lambda_sigma_closed_form(e));
      CHECK((dense - closed).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("identity elements leave the weights untouched") {
  Rng rng(111);
  MLPWeights w = init_mlp({4, 6, 5, 3}, Activation::relu, 0xFEED);
  const std::vector<IntertwinerElement> elems = {
      make_intertwiner(Activation::relu, identity_scaled_permutation(6)),
      make_intertwiner(Activation::relu, identity_scaled_permutation(5))};
  const MLPWeights wt = intertwiner_transform_weights(w, elems);
  for (int i = 0; i < w.num_layers(); ++i) {
    CHECK((wt.layers[i].weight - w.layers[i].weight).cwiseAbs().maxCoeff() == 0.0);
    CHECK((wt.layers[i].bias - w.layers[i].bias).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("transformed weights leave the network function invariant") {
  Rng rng(121);
  for (const Activation act : {Activation::relu, Activation::gelu, Activation::sigmoid}) {
    MLPWeights w = init_mlp({5, 12, 9, 4}, act, rng());
    const std::vector<IntertwinerElement> elems = {random_intertwiner(act, 12, rng),
                                                   random_intertwiner(act, 9, rng)};
    const MLPWeights wt = intertwiner_transform_weights(w, elems);
    const Matrix samples = random_matrix(64, 5, rng);
    CHECK(verify_network_invariance(w, wt, samples) <= 1e-9);

    // latent representations transform by lambda of the matching element
    const Matrix phi = encode(w, samples);
    const Matrix phi_t = encode(wt, samples);
    const Matrix lambda = lambda_sigma(act, linear_matrix(elems[w.latent_layer - 1].action));
    const Matrix expected = phi * lambda.transpose();
    CHECK((phi_t - expected).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("verify_network_invariance detects differences") {
  Rng rng(131);
  const MLPWeights w = init_mlp({4, 8, 3}, Activation::gelu, 0xABCD);
  CHECK(verify_network_invariance(w, w, random_matrix(16, 4, rng)) == 0.0);

  MLPWeights perturbed = w;
  perturbed.layers[0].weight(0, 0) += 0.1;
  CHECK(verify_network_invariance(w, perturbed, random_matrix(16, 4, rng)) > 0.0);

  MLPWeights other_arch = init_mlp({4, 9, 3}, Activation::gelu, 0xABCD);
  CHECK_THROWS_AS(verify_network_invariance(w, other_arch, random_matrix(4, 4, rng)),
                  ArchitectureMismatch);
}

TEST_CASE("element count and dimension are validated") {
  Rng rng(141);
  const MLPWeights w = init_mlp({4, 8, 3}, Activation::relu, 1);
  CHECK_THROWS_AS(intertwiner_transform_weights(w, {}), DimensionMismatch);
  const std::vector<IntertwinerElement> wrong_dim = {random_intertwiner(Activation::relu, 7, rng)};
  CHECK_THROWS_AS(intertwiner_transform_weights(w, wrong_dim), DimensionMismatch);
  const std::vector<IntertwinerElement> wrong_act = {
      random_intertwiner(Activation::sigmoid, 8, rng)};
  CHECK_THROWS_AS(intertwiner_transform_weights(w, wrong_act), MembershipViolation);
}
