#pragma once

// Subgradient descent on  L_n(theta) + R(theta)  with an optional warmup
// phase that runs plain MSE first, plus the closed-form theory constants
// (penalty scale and sample-size threshold) used by the experiments.

#include <cstdint>
#include <span>
#include <vector>

#include "specbool/models.hpp"
#include "specbool/spectral_reg.hpp"

namespace specbool {

// Labeled sample of cube points; X is row-major n x d with +-1 entries.
struct Dataset {
    int d = 0;
    std::vector<double> X;
    std::vector<double> y;

    size_t size() const { return y.size(); }
    std::span<const double> point(size_t i) const {
        return std::span<const double>(X.data() + i * size_t(d), size_t(d));
    }
    void push_back(std::span<const double> x, double label) {
        X.insert(X.end(), x.begin(), x.end());
        y.push_back(label);
    }
};

void check_dataset(const Dataset& data);

// (1/n) sum_i (f_theta(x_i) - y_i)^2.
double mse_loss(const Model& model, const Dataset& data);

// grad receives (2/n) sum_i (f_theta(x_i) - y_i) grad f_theta(x_i);
// returns the MSE as a byproduct of the residual pass.
double mse_gradient(const Model& model, const Dataset& data, std::span<double> grad);

enum class WeightDecayKind { none, l1_weights, l2_weights };

struct TrainConfig {
    RegConfig reg;                     // spectral penalty (lambda = 0 disables)
    double learning_rate = 1e-2;
    int epochs = 2000;
    int batch_size = 0;                // 0 => full batch
    int warmup_epochs = 0;             // MSE-only epochs before the penalty
    uint64_t seed = 0;                 // minibatch shuffling
    double stationarity_tol = 1e-3;
    double interpolation_delta = -1.0; // < 0 => auto: 1e-3 * Var(y)
    WeightDecayKind weight_decay = WeightDecayKind::none;
    double weight_decay_strength = 0.0;
    int log_every = 10;
    // When the tracked objective increases between consecutive logged
    // epochs, halve the learning rate.  Off by default (plain constant-step
    // subgradient descent); the convex-agreement experiments enable it.
    bool halve_lr_on_increase = false;
};

struct TrainStep {
    int epoch;
    double mse;
    double reg;
    double total; // mse + reg + weight-decay term
};

struct TrainReport {
    std::vector<double> theta;         // final parameters (also left in the model)
    std::vector<TrainStep> trajectory; // sampled every log_every epochs + final
    double final_mse = 0.0;
    double final_reg = 0.0;
    double final_total = 0.0;
    double stationarity_residual = 0.0; // ||grad L_n + G (+ decay grad)||_2 at the end
    bool is_stationary = false;
    bool is_interpolator = false;       // final L_n <= interpolation delta
    double interpolation_delta = 0.0;   // resolved threshold
    bool diverged = false;              // loss/params went non-finite
    int diverged_epoch = -1;
    int epochs_run = 0;
    double final_learning_rate = 0.0;
    double lambda = 0.0;                // penalty strength the run actually used
    double wall_time_s = 0.0;           // informational only; never serialized
};

// Runs in place on `model` (whose parameters are the initial point).  On
// divergence the model and report carry the last finite parameters and the
// report is flagged; nothing is thrown for divergence.
TrainReport train(Model& model, const Dataset& data, const TrainConfig& cfg);

// Penalty scale 4 * C0 * sigma * sqrt((d + ln(1/delta)) / n).
double theoretical_lambda(double sigma, int d, size_t n, double delta, double C0 = 1.0);

// Sample-size threshold C1 * sigma^2 * (d^2 mu^2 + L^2 k) * (d + ln(1/delta)) / c_star^2.
double theoretical_n0(double sigma, int d, double mu, double L, int k, double delta,
                      double c_star, double C1 = 1.0);

} // namespace specbool
