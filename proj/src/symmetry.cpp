#include "toporel/symmetry.hpp"

#include <cmath>
#include <random>

namespace toporel {

namespace detail {

Matrix solve_right_inverse(const Matrix& sigma_a, const Matrix& sigma_i) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sigma_i);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (smin <= 0.0 || sv(0) / smin >= 1e12) {
    throw SingularSigmaIdentity("sigma(I_n) is not numerically invertible (cond >= 1e12)");
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu{Eigen::MatrixXd(sigma_i)};
  Eigen::MatrixXd result = Eigen::MatrixXd(sigma_a) * lu.inverse();
  return Matrix(result);
}

}  // namespace detail

Matrix lambda_sigma(Activation activation, const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch("lambda_sigma: matrix must be square");
  }
  const Matrix sigma_a = activation_apply(activation, a);
  const Matrix sigma_i =
      activation_apply(activation, Matrix(Matrix::Identity(a.rows(), a.cols())));
  return detail::solve_right_inverse(sigma_a, sigma_i);
}

namespace {

// sigma(A x) = lambda_sigma(A) sigma(x) on 32 fixed pseudo-random probes.
void check_membership(Activation activation, const ScaledPermutation& action) {
  if (action.shift.cwiseAbs().maxCoeff() != 0.0) {
    throw MembershipViolation("intertwiner elements carry no shift");
  }
  for (int i = 0; i < action.dim(); ++i) {
    if (action.scale[i] == 0.0) {
      throw MembershipViolation("intertwiner element has a zero scale entry");
    }
  }
  const Matrix a = linear_matrix(action);
  const Matrix lambda = lambda_sigma(activation, a);
  Rng rng(0x1e7e57ull + static_cast<std::uint64_t>(action.dim()));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int probe = 0; probe < 32; ++probe) {
    Vector x(action.dim());
    for (int i = 0; i < action.dim(); ++i) x[i] = normal(rng);
    const Vector lhs = activation_apply(activation, Vector(a * x));
    const Vector rhs = lambda * activation_apply(activation, x);
    if ((lhs - rhs).cwiseAbs().maxCoeff() > 1e-8) {
      throw MembershipViolation(std::string("element is not in the intertwiner group of ") +
                                to_string(activation));
    }
  }
}

}  // namespace

IntertwinerElement make_intertwiner(Activation activation, const ScaledPermutation& action) {
  check_membership(activation, action);
  return IntertwinerElement{activation, action};
}

IntertwinerElement random_intertwiner(Activation activation, int n, Rng& rng) {
  ScaledPermutation g = identity_scaled_permutation(n);
  for (int i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(g.perm[i], g.perm[pick(rng)]);
  }
  if (activation == Activation::relu) {
    // relu commutes with positive rescalings; the other supported activations
    // only admit permutations.
    std::uniform_real_distribution<double> log_scale(std::log(0.5), std::log(2.0));
    for (int i = 0; i < n; ++i) g.scale[i] = std::exp(log_scale(rng));
  }
  return make_intertwiner(activation, g);
}

namespace {

void check_elements(const MLPWeights& w, const std::vector<IntertwinerElement>& elements,
                    int expected, const char* what) {
  if (static_cast<int>(elements.size()) != expected) {
    throw DimensionMismatch(std::string(what) + ": need " + std::to_string(expected) +
                            " elements, got " + std::to_string(elements.size()));
  }
  for (int i = 0; i < expected; ++i) {
    if (elements[i].dim() != w.layers[i].weight.rows()) {
      throw DimensionMismatch(std::string(what) + ": element " + std::to_string(i) +
                              " has dim " + std::to_string(elements[i].dim()) +
                              ", layer width " + std::to_string(w.layers[i].weight.rows()));
    }
    if (elements[i].activation != w.activation) {
      throw MembershipViolation(std::string(what) + ": element activation differs");
    }
    check_membership(w.activation, elements[i].action);
  }
}

}  // namespace

MLPWeights intertwiner_transform_weights(const MLPWeights& w,
                                         const std::vector<IntertwinerElement>& elements) {
  const int l = w.num_layers();
  check_elements(w, elements, l - 1, "intertwiner_transform_weights");

  MLPWeights out = w;
  for (int i = 0; i < l; ++i) {
    if (i < l - 1) {
      const Matrix a = linear_matrix(elements[i].action);
      out.layers[i].weight = a * w.layers[i].weight;
      out.layers[i].bias = a * w.layers[i].bias;
    } else {
      out.layers[i].weight = w.layers[i].weight;
      out.layers[i].bias = w.layers[i].bias;
    }
    if (i > 0) {
      const Matrix lambda_inv =
          lambda_sigma(w.activation, linear_matrix(inverse(elements[i - 1].action)));
      out.layers[i].weight = out.layers[i].weight * lambda_inv;
    }
  }
  return out;
}

MLPWeights intertwiner_transform_encoder(const MLPWeights& w,
                                         const std::vector<IntertwinerElement>& elements) {
  const int m = w.latent_layer;
  check_elements(w, elements, m, "intertwiner_transform_encoder");

  MLPWeights out = w;
  for (int i = 0; i < m; ++i) {
    const Matrix a = linear_matrix(elements[i].action);
    out.layers[i].weight = a * w.layers[i].weight;
    out.layers[i].bias = a * w.layers[i].bias;
    if (i > 0) {
      const Matrix lambda_inv =
          lambda_sigma(w.activation, linear_matrix(inverse(elements[i - 1].action)));
      out.layers[i].weight = out.layers[i].weight * lambda_inv;
    }
  }
  return out;
}

ScaledPermutation lambda_sigma_closed_form(const IntertwinerElement& element) {
  const double sigma_one = activation_apply(element.activation, 1.0);
  ScaledPermutation lambda = element.action;
  lambda.shift = Vector::Zero(lambda.dim());
  for (int i = 0; i < lambda.dim(); ++i) {
    lambda.scale[i] = activation_apply(element.activation, element.action.scale[i]) / sigma_one;
  }
  return lambda;
}

}  // namespace toporel
