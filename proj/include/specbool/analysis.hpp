#pragma once

// Landscape and recovery diagnostics: perturbation-based curvature ratios
// (quadratic-growth and restricted-secant estimates), the gradient
// second-moment spectral bound, the noise sup-statistic check behind the
// penalty scale, and fit/support quality metrics.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "specbool/models.hpp"
#include "specbool/trainer.hpp"

namespace specbool {

struct ErrSnapshot {
    double err = 0.0;                        // (1/n) sum (f_model - f_ref)^2
    std::optional<double> param_distance;    // ||theta - theta_ref||_2 when comparable
};

// Labels in `inputs` are ignored; only the points are used.
ErrSnapshot empirical_err(const Model& model, const Model& reference, const Dataset& inputs);

struct QGRow {
    double sigma;
    double min_ratio;           // min_k err_k / (||W_k||^2 / M)
    double min_ratio_per_param; // min_ratio / M
    int K;
    int M;
};

// For each sigma: draw K Gaussian parameter perturbations W ~ N(0, sigma^2 I),
// evaluate err(theta* + W) over the inputs, and take the minimum of
// err / (||W||^2 / M); the realized-norm denominator makes the per-parameter
// column directly comparable to the curvature constant.  Perturbations are
// drawn sequentially from one stream per sigma, so a larger K scans a
// superset of candidates.
std::vector<QGRow> qg_estimate(const Model& reference, const Dataset& inputs,
                               std::span<const double> sigma_grid, int K, uint64_t seed);

// Test hook: explicit perturbations.  Throws std::domain_error on a zero
// perturbation (the ratio is undefined).
double qg_min_ratio(const Model& reference, const Dataset& inputs,
                    const std::vector<std::vector<double>>& perturbations);

struct RsiRow {
    double sigma;
    double min_ratio; // min_k <W_k, grad err(theta* + W_k)> / ||W_k||^2
    int K;
    int M;
};

// Restricted-secant ratio along the same perturbation protocol.  Diagnostic
// only; nothing downstream consumes it as a gate.
std::vector<RsiRow> rsi_estimate(const Model& reference, const Dataset& inputs,
                                 std::span<const double> sigma_grid, int K, uint64_t seed);
double rsi_min_ratio(const Model& reference, const Dataset& inputs,
                     const std::vector<std::vector<double>>& perturbations);

// Largest eigenvalue of (1/2^d) sum_x grad f(x) grad f(x)^T by power
// iteration to relative tolerance `tol`; throws on non-convergence.
double gradient_covariance_bound(const Model& model, double tol = 1e-8, int max_iters = 10000,
                                 uint64_t seed = 1);

struct NoiseCheck {
    double quantile = 0.0; // empirical (1-delta)-quantile of ||H_u z||_inf
    double bound = 0.0;    // C0 sigma sqrt((d + ln(1/delta)) / n)
    double envelope = 0.0; // 4 * bound (the penalty scale)
    std::vector<double> samples;
};

// Monte-Carlo check of the noise sup-statistic: per trial, n noise draws are
// scattered uniformly over the cube into z (each adds noise/n), and the
// statistic is max_m |(H_u z)_m|.
NoiseCheck noise_linf_check(int d, size_t n, double sigma, double delta, int trials,
                            uint64_t seed, double C0 = 1.0);

// 1 - SS_res / SS_tot; throws if truths are constant or fewer than 2 points.
double r_squared(std::span<const double> predictions, std::span<const double> truths);

struct SupportMetrics {
    double precision = 0.0;
    double recall = 0.0;
};

// Overlap of the top-k masks by |coeff| (ties broken toward smaller masks);
// zero coefficients never make the top set.
SupportMetrics support_metrics(const Spectrum& estimated, const Spectrum& truth, int k);

// Top-k masks by |coeff| (helper shared with the experiment drivers).
std::vector<uint32_t> top_k_masks(const Spectrum& s, int k);

} // namespace specbool
