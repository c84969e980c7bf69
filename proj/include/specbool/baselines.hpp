#pragma once

// Direct convex solvers on the explicit Walsh feature expansion:
// accelerated proximal gradient (FISTA with adaptive restart) for
//   (1/n) ||Phi a - y||^2 + lambda ||a||_1,
// and ridge-jittered least squares on a fixed support for debiasing.
// Phi rows are feature_map(x) = (chi_m(x))_{m < 2^d}, so the FISTA solution
// is directly comparable to the trainer on a full-support polynomial model
// (identical objective).

#include <cstdint>
#include <vector>

#include "specbool/hypercube.hpp"
#include "specbool/trainer.hpp"

namespace specbool {

// Row of the design matrix at x: all 2^d monomial values.  Guarded to
// d <= 16 (the row has 2^d entries).
std::vector<double> feature_map(std::span<const double> x, int d);

struct LassoConfig {
    double lambda = 0.0;
    int max_iters = 20000;
    double tol = 1e-12;          // relative objective-change stopping
    double kkt_target = 1e-7;    // stop early once the KKT residual is this small
    double prune_eps = 1e-10;    // |a_m| <= eps dropped from the reported spectrum
    size_t memory_budget = size_t(64) << 20; // max doubles in a dense design
    bool record_trace = false;   // keep the per-iteration objective
};

struct LassoResult {
    Spectrum spectrum;           // pruned solution
    std::vector<double> alpha;   // full coefficient vector, length 2^d
    double objective = 0.0;      // at the returned iterate
    double mse = 0.0;
    double l1 = 0.0;
    int iters = 0;
    bool converged = false;
    double kkt_violation = 0.0;  // max coordinate slack (see kkt_residual)
    double step = 0.0;           // 1 / Lipschitz estimate used
    std::vector<double> trace;   // objective per iteration when recorded
};

LassoResult lasso_fista(const Dataset& data, const LassoConfig& cfg);

// Largest KKT slack of a at penalty lambda: for a_m = 0 the excess of
// |r_m| over lambda, else |r_m + lambda sgn(a_m)|, with r = (2/n) Phi^T (Phi a - y).
double kkt_residual(const Dataset& data, const std::vector<double>& alpha, double lambda);

// Least squares restricted to `support` via normal equations with ridge
// jitter 1e-10; throws on a singular system beyond the jitter.
Spectrum ordinary_least_squares(const Dataset& data, std::vector<uint32_t> support);

} // namespace specbool
