#pragma once

// Sparsity penalty on the Walsh spectrum of the model function and its
// subgradient in the model parameters.
//
// With alpha(theta) = 2^{-d} H_u f_theta(X) (X = whole cube), the penalty is
//   R(theta) = lambda * ||alpha(theta)||_1,
// and a subgradient is
//   G = lambda * sum_{x in X} w(x) grad_theta f_theta(x),
//   w = 2^{-d} H_u z,  z_m = sgn(alpha_m),
// i.e. one forward sweep over the cube, two Walsh transforms, and one
// weighted gradient sweep.  For a polynomial model on its own support this
// reduces exactly to lambda * sgn(theta) (the LASSO subgradient).

#include <span>
#include <vector>

#include "specbool/models.hpp"

namespace specbool {

enum class ZeroSignRule { zero, positive, negative };

struct RegConfig {
    double lambda = 0.0;
    ZeroSignRule zero_sign = ZeroSignRule::zero; // sgn(0) convention
};

struct RegEval {
    double value = 0.0;            // lambda * ||alpha||_1
    std::vector<double> grad;      // subgradient, length param_count()
    double min_abs_alpha = 0.0;    // genericity diagnostic: min_m |alpha_m|
};

// R(theta) only (one cube sweep + one transform).
double regularizer_value(const Model& model, const RegConfig& cfg);

// R(theta) and a subgradient.  lambda = 0 short-circuits to exact zeros.
RegEval regularizer_subgradient(const Model& model, const RegConfig& cfg);

} // namespace specbool
