#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "toporel/mlp.hpp"
#include "toporel/symmetry.hpp"
#include "toporel/train.hpp"

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

bool bitwise_equal(const MLPWeights& a, const MLPWeights& b) {
  if (a.num_layers() != b.num_layers()) return false;
  for (int i = 0; i < a.num_layers(); ++i) {
    if ((a.layers[i].weight.array() != b.layers[i].weight.array()).any()) return false;
    if ((a.layers[i].bias.array() != b.layers[i].bias.array()).any()) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("init is deterministic with zero biases and bounded weights") {
  const MLPWeights a = init_mlp({4, 8, 3}, Activation::gelu, 7);
  const MLPWeights b = init_mlp({4, 8, 3}, Activation::gelu, 7);
  CHECK(bitwise_equal(a, b));
  const MLPWeights c = init_mlp({4, 8, 3}, Activation::gelu, 8);
  CHECK(!bitwise_equal(a, c));

  for (const auto& layer : a.layers) {
    CHECK(layer.bias.cwiseAbs().maxCoeff() == 0.0);
    const double bound = std::sqrt(6.0 / (layer.weight.cols() + layer.weight.rows()));
    CHECK(layer.weight.cwiseAbs().maxCoeff() <= bound);
  }
  CHECK_THROWS_AS(init_mlp({4, 3}, Activation::relu, 1), BadArchitecture);
  CHECK_THROWS_AS(init_mlp({4, 0, 3}, Activation::relu, 1), BadArchitecture);
}

TEST_CASE("forward of a linear two-layer network, by hand") {
  MLPWeights w;
  w.activation = Activation::identity;
  w.latent_layer = 1;
  w.layers.resize(2);
  w.layers[0].weight = Matrix(2, 2);
  w.layers[0].weight << 1, 2, 3, 4;
  w.layers[0].bias = Vector(2);
  w.layers[0].bias << 1, -1;
  w.layers[1].weight = Matrix(2, 2);
  w.layers[1].weight << 0, 1, 1, 0;
  w.layers[1].bias = Vector::Zero(2);

  Matrix x(1, 2);
  x << 1, 1;
  const Matrix out = forward(w, x);
  // W1 x + b1 = (4, 6); swap -> (6, 4)
  CHECK(out(0, 0) == doctest::Approx(6.0));
  CHECK(out(0, 1) == doctest::Approx(4.0));
}

TEST_CASE("zero input with zero biases gives zero relu logits") {
  MLPWeights w = init_mlp({3, 5, 2}, Activation::relu, 3);
  const Matrix out = forward(w, Matrix(Matrix::Zero(4, 3)));
  CHECK(out.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward matches a straight-line evaluation") {
  Rng rng(17);
  const MLPWeights w = init_mlp({4, 6, 5, 3}, Activation::gelu, 0x1234);
  const Matrix x = random_matrix(5, 4, rng);
  const Matrix got = forward(w, x);

  for (Eigen::Index row = 0; row < x.rows(); ++row) {
    std::vector<double> cur(4);
    for (int c = 0; c < 4; ++c) cur[c] = x(row, c);
    for (int layer = 0; layer < w.num_layers(); ++layer) {
      const auto& wl = w.layers[layer];
      std::vector<double> next(wl.weight.rows());
      for (Eigen::Index o = 0; o < wl.weight.rows(); ++o) {
        double sum = wl.bias[o];
        for (Eigen::Index i = 0; i < wl.weight.cols(); ++i) sum += wl.weight(o, i) * cur[i];
        next[o] = layer + 1 < w.num_layers() ? activation_apply(w.activation, sum) : sum;
      }
      cur = next;
    }
    for (int c = 0; c < 3; ++c) CHECK(got(row, c) == doctest::Approx(cur[c]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(forward(w, random_matrix(2, 5, rng)), DimensionMismatch);
}

TEST_CASE("encode and head compose to forward, bitwise") {
  Rng rng(19);
  const MLPWeights w = init_mlp({4, 7, 6, 3}, Activation::gelu, 0x4321);
  CHECK(w.latent_layer == 2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = random_matrix(6, 4, rng);
    const Matrix z = encode(w, x);
    CHECK(z.cols() == 6);  // latent width
    const Matrix via_split = head(w, z);
    const Matrix direct = forward(w, x);
    CHECK((via_split.array() == direct.array()).all());
  }
}

TEST_CASE("encode of intertwiner-transformed weights is lambda times encode") {
  Rng rng(23);
  const MLPWeights w = init_mlp({4, 9, 6, 3}, Activation::relu, 0x777);
  const std::vector<IntertwinerElement> elems = {
      random_intertwiner(Activation::relu, 9, rng),
      random_intertwiner(Activation::relu, 6, rng)};
  const MLPWeights wt = intertwiner_transform_weights(w, elems);
  const Matrix x = random_matrix(10, 4, rng);
  const Matrix lambda = lambda_sigma(Activation::relu, linear_matrix(elems[1].action));
  const Matrix diff = encode(wt, x) - encode(w, x) * lambda.transpose();
  CHECK(diff.cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("softmax cross entropy values and gradient") {
  Matrix uniform = Matrix::Zero(3, 5);
  const auto [loss, grad] = softmax_cross_entropy(uniform, {0, 3, 4});
  CHECK(loss == doctest::Approx(std::log(5.0)).epsilon(1e-9));
  CHECK(grad.rows() == 3);

  // a huge correct-logit margin drives the loss to zero
  Matrix confident = Matrix::Zero(1, 4);
  confident(0, 2) = 60.0;
  CHECK(softmax_cross_entropy(confident, {2}).first < 1e-12);

  CHECK_THROWS_AS(softmax_cross_entropy(uniform, {0, 1}), LengthMismatch);
  CHECK_THROWS_AS(softmax_cross_entropy(uniform, {0, 1, 5}), LabelOutOfRange);

  // gradient vs central differences
  Rng rng(29);
  Matrix logits = random_matrix(4, 3, rng);
  const std::vector<int> labels = {2, 0, 1, 1};
  const Matrix analytic = softmax_cross_entropy(logits, labels).second;
  const double h = 1e-6;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      const double orig = logits(r, c);
      logits(r, c) = orig + h;
      const double up = softmax_cross_entropy(logits, labels).first;
      logits(r, c) = orig - h;
      const double down = softmax_cross_entropy(logits, labels).first;
      logits(r, c) = orig;
      CHECK(analytic(r, c) == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6));
    }
  }
}

TEST_CASE("backward with zero upstream gradients is zero") {
  Rng rng(31);
  const MLPWeights w = init_mlp({3, 6, 4}, Activation::gelu, 0x999);
  const Matrix x = random_matrix(5, 3, rng);
  ForwardCache cache;
  forward(w, x, &cache);
  const Gradients g = backward(w, cache, Matrix(Matrix::Zero(5, 4)));
  for (const auto& layer : g.layers) {
    CHECK(layer.weight.cwiseAbs().maxCoeff() == 0.0);
    CHECK(layer.bias.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("injected latent gradient equals backprop of its inner product") {
  // With zero task gradient, backward with injection g computes the gradient
  // of <g, phi_m(x)>; check by central differences of that inner product.
  Rng rng(37);
  MLPWeights w = init_mlp({3, 5, 4, 2}, Activation::gelu, 0x242);
  const Matrix x = random_matrix(4, 3, rng);
  const Matrix inject = random_matrix(4, 4, rng);

  ForwardCache cache;
  forward(w, x, &cache);
  const Gradients analytic = backward(w, cache, Matrix(Matrix::Zero(4, 2)), &inject);

  auto inner = [&](const MLPWeights& weights) {
    return (encode(weights, x).cwiseProduct(inject)).sum();
  };
  const double h = 1e-6;
  double worst = 0.0;
  for (int layer = 0; layer < w.num_layers(); ++layer) {
    Matrix& wm = w.layers[layer].weight;
    for (Eigen::Index r = 0; r < wm.rows(); ++r) {
      for (Eigen::Index c = 0; c < wm.cols(); ++c) {
        const double orig = wm(r, c);
        wm(r, c) = orig + h;
        const double up = inner(w);
        wm(r, c) = orig - h;
        const double down = inner(w);
        wm(r, c) = orig;
        const double fd = (up - down) / (2 * h);
        const double a = analytic.layers[layer].weight(r, c);
        const double denom = std::max({std::abs(a), std::abs(fd), 1e-4});
        worst = std::max(worst, std::abs(a - fd) / denom);
      }
    }
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("cache mismatches are rejected") {
  Rng rng(41);
  const MLPWeights w = init_mlp({3, 6, 4}, Activation::gelu, 1);
  ForwardCache cache;
  forward(w, random_matrix(5, 3, rng), &cache);
  CHECK_THROWS_AS(backward(w, cache, Matrix(Matrix::Zero(5, 3))), CacheMismatch);
  ForwardCache enc_cache;
  encode(w, random_matrix(5, 3, rng), &enc_cache);
  CHECK_THROWS_AS(backward(w, enc_cache, Matrix(Matrix::Zero(5, 4))), CacheMismatch);
}

TEST_CASE("cyclic weight is a triangular wave") {
  CHECK(cyclic_weight(0, 10) == doctest::Approx(0.0));
  CHECK(cyclic_weight(5, 10) == doctest::Approx(1.0));
  CHECK(cyclic_weight(10, 10) == doctest::Approx(0.0));
  for (int s = 0; s < 100; ++s) {
    const double v = cyclic_weight(s, 10);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(cyclic_weight(s, 10) == doctest::Approx(cyclic_weight(s + 10, 10)));
  }
  CHECK_THROWS_AS(cyclic_weight(0, 1), BadPeriod);
}

TEST_CASE("weights round-trip through the binary format") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "toporel_roundtrip.mlpw";

  MLPWeights w = init_mlp_split({4, 6, 5}, {3, 2}, Activation::sigmoid, 0x5A5A);
  Rng rng(43);
  Vector mean(5), stddev(5);
  for (int i = 0; i < 5; ++i) {
    mean[i] = static_cast<double>(rng()) / 1e19;
    stddev[i] = 0.5 + static_cast<double>(rng() % 100) / 100.0;
  }
  save_mlp_weights(path.string(), w, &mean, &stddev);

  Vector mean2, stddev2;
  bool has_running = false;
  const MLPWeights loaded = load_mlp_weights(path.string(), &mean2, &stddev2, &has_running);
  CHECK(has_running);
  CHECK(loaded.activation == Activation::sigmoid);
  CHECK(loaded.latent_layer == 2);
  CHECK(bitwise_equal(w, loaded));
  CHECK((mean2.array() == mean.array()).all());
  CHECK((stddev2.array() == stddev.array()).all());

  save_mlp_weights(path.string(), w);
  bool has_running2 = true;
  const MLPWeights plain = load_mlp_weights(path.string(), nullptr, nullptr, &has_running2);
  CHECK(!has_running2);
  CHECK(bitwise_equal(w, plain));
  fs::remove(path);
}

TEST_CASE("loading a non-MLPW file fails cleanly") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "toporel_bad.mlpw";
  {
    FILE* f = std::fopen(path.string().c_str(), "wb");
    std::fputs("definitely not weights", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_mlp_weights(path.string()), IoError);
  fs::remove(path);
}
