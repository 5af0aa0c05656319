#pragma once

#include <string>

#include "toporel/common.hpp"

namespace toporel {

// GELU uses the exact Gaussian-CDF form x * Phi(x) (erf-based), not the tanh
// approximation.
enum class Activation { relu, gelu, sigmoid, identity };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

double activation_apply(Activation a, double x);
Vector activation_apply(Activation a, const Vector& x);
Matrix activation_apply(Activation a, const Matrix& x);

// Derivative with respect to the pre-activation value.
double activation_derivative(Activation a, double x);
Matrix activation_derivative(Activation a, const Matrix& x);

}  // namespace toporel
