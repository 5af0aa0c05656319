#pragma once

#include <vector>

#include "toporel/activation.hpp"
#include "toporel/common.hpp"
#include "toporel/geometry.hpp"
#include "toporel/mlp.hpp"

namespace toporel {

// Element of the intertwiner group of an activation, stored as a scaled
// permutation with zero shift. Construction enforces the membership relation
// sigma(A x) = lambda_sigma(A) sigma(x) numerically.
struct IntertwinerElement {
  Activation activation = Activation::relu;
  ScaledPermutation action;

  int dim() const { return action.dim(); }
};

// lambda_sigma(A) = sigma(A) sigma(I_n)^{-1}, computed by the literal formula
// with a dense solve.
Matrix lambda_sigma(Activation activation, const Matrix& a);

IntertwinerElement make_intertwiner(Activation activation, const ScaledPermutation& action);

// Sampled families for which the membership check passes: relu gets strictly
// positive scales times a permutation; gelu, sigmoid and identity get pure
// permutations.
IntertwinerElement random_intertwiner(Activation activation, int n, Rng& rng);

// Prop-2.4-style weight transformation: one element per hidden layer,
// producing a network equal to the original as a function.
MLPWeights intertwiner_transform_weights(const MLPWeights& w,
                                         const std::vector<IntertwinerElement>& elements);

// Transforms only the encoder layers (one element per encoder layer, the last
// element acting at the latent layer). The head is copied unchanged, so the
// resulting latent representation is lambda_sigma(last element) applied to
// the original one.
MLPWeights intertwiner_transform_encoder(const MLPWeights& w,
                                         const std::vector<IntertwinerElement>& elements);

// Closed-form lambda for a membership-checked scaled-permutation element:
// lambda = diag(sigma(scale_i)/sigma(1)) * P. Agreement with the dense
// formula is an enforced test invariant.
ScaledPermutation lambda_sigma_closed_form(const IntertwinerElement& element);

namespace detail {
// Right-division sigma_a * sigma_i^{-1}; throws SingularSigmaIdentity when
// cond(sigma_i) >= 1e12.
Matrix solve_right_inverse(const Matrix& sigma_a, const Matrix& sigma_i);
}  // namespace detail

}  // namespace toporel
