#pragma once

// Synthetic ground-truth function families (sparse spectra) and the sampler
// that draws noisy datasets from them.

#include <cstdint>
#include <map>
#include <string>

#include "specbool/hypercube.hpp"
#include "specbool/trainer.hpp"

namespace specbool {

struct GroundTruth {
    Spectrum spectrum;
    std::string family;
    std::map<std::string, double> params; // family parameters, echoed to outputs
};

// Single random monomial of the given order, coefficient +1.
GroundTruth gen_monomial(int d, int order, uint64_t seed);

// k distinct masks of one order; magnitudes j^{-gamma} (j = 1..k, assigned in
// draw order), random signs, then max-normalized.
GroundTruth gen_power_law(int d, int order, int k, double gamma, uint64_t seed);

// Hierarchical 18-mask staircase: 3 random singletons; each singleton gets 2
// order-2 supersets whose extension coordinate avoids the other singletons;
// the first three order-2 masks get 2 order-3 supersets each and the last
// three get 1 (9 order-3 masks).  Coefficients are equal within an order
// with per-order magnitudes (1, ratio, ratio^2).
GroundTruth gen_staircase(int d, double ratio, uint64_t seed);

// Fixed reference function used by the curvature experiments:
// f(x) = 3 x_1 + 4 x_2 x_3 + 5 x_4 x_5 + x_12 at d = 13.
GroundTruth qg_preset();

// n points uniform on the cube (with replacement), y = f(x) + N(0, sigma^2).
// Index and noise draws are interleaved per point; sigma = 0 draws no noise.
Dataset sample_dataset(const Spectrum& truth, size_t n, double sigma, uint64_t seed);

} // namespace specbool
