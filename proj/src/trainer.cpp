#include "specbool/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "specbool/rng.hpp"

namespace specbool {

void check_dataset(const Dataset& data) {
    check_dim(data.d);
    if (data.y.empty())
        throw std::invalid_argument("dataset is empty");
    if (data.X.size() != data.y.size() * size_t(data.d))
        throw std::invalid_argument("dataset X/y size mismatch");
    for (double v : data.X)
        if (v != 1.0 && v != -1.0)
            throw std::invalid_argument("dataset inputs must be +1 or -1");
}

double mse_loss(const Model& model, const Dataset& data) {
    check_dataset(data);
    if (model.dim() != data.d)
        throw std::invalid_argument("model/dataset dimension mismatch");
    const size_t n = data.size();
    std::vector<double> f(n);
    model.eval_batch(data.X.data(), n, f.data());
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double r = f[i] - data.y[i];
        acc += r * r;
    }
    return acc / double(n);
}

double mse_gradient(const Model& model, const Dataset& data, std::span<double> grad) {
    check_dataset(data);
    if (model.dim() != data.d)
        throw std::invalid_argument("model/dataset dimension mismatch");
    if (grad.size() != size_t(model.param_count()))
        throw std::invalid_argument("gradient size mismatch");
    const size_t n = data.size();
    std::vector<double> w(n);
    model.eval_batch(data.X.data(), n, w.data());
    double acc = 0.0;
    const double scale = 2.0 / double(n);
    for (size_t i = 0; i < n; ++i) {
        const double r = w[i] - data.y[i];
        acc += r * r;
        w[i] = scale * r;
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    model.weighted_grad_accumulate(data.X.data(), w.data(), n, grad.data());
    return acc / double(n);
}

namespace {

// Minibatch MSE gradient over the rows listed in idx; grad is overwritten.
double mse_gradient_batch(const Model& model, const Dataset& data,
                          std::span<const uint32_t> idx, std::span<double> grad) {
    const size_t b = idx.size();
    const size_t d = size_t(data.d);
    std::vector<double> X(b * d), w(b);
    for (size_t i = 0; i < b; ++i)
        std::copy_n(data.X.data() + size_t(idx[i]) * d, d, X.data() + i * d);
    model.eval_batch(X.data(), b, w.data());
    double acc = 0.0;
    const double scale = 2.0 / double(b);
    for (size_t i = 0; i < b; ++i) {
        const double r = w[i] - data.y[size_t(idx[i])];
        acc += r * r;
        w[i] = scale * r;
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    model.weighted_grad_accumulate(X.data(), w.data(), b, grad.data());
    return acc / double(b);
}

double weight_decay_term(const TrainConfig& cfg, const std::vector<double>& theta) {
    if (cfg.weight_decay == WeightDecayKind::none || cfg.weight_decay_strength == 0.0)
        return 0.0;
    double acc = 0.0;
    if (cfg.weight_decay == WeightDecayKind::l1_weights) {
        for (double t : theta)
            acc += std::fabs(t);
    } else {
        for (double t : theta)
            acc += t * t;
    }
    return cfg.weight_decay_strength * acc;
}

void add_weight_decay_grad(const TrainConfig& cfg, const std::vector<double>& theta,
                           std::span<double> grad) {
    if (cfg.weight_decay == WeightDecayKind::none || cfg.weight_decay_strength == 0.0)
        return;
    const double w = cfg.weight_decay_strength;
    if (cfg.weight_decay == WeightDecayKind::l1_weights) {
        for (size_t j = 0; j < theta.size(); ++j) {
            const double t = theta[j];
            grad[j] += w * (t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0));
        }
    } else {
        for (size_t j = 0; j < theta.size(); ++j)
            grad[j] += 2.0 * w * theta[j];
    }
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x))
            return false;
    return true;
}

} // namespace

TrainReport train(Model& model, const Dataset& data, const TrainConfig& cfg) {
    check_dataset(data);
    if (model.dim() != data.d)
        throw std::invalid_argument("model/dataset dimension mismatch");
    if (cfg.learning_rate <= 0.0)
        throw std::invalid_argument("learning rate must be positive");
    if (cfg.epochs < 0 || cfg.warmup_epochs < 0 || cfg.batch_size < 0)
        throw std::invalid_argument("epochs/warmup/batch_size must be non-negative");
    if (cfg.log_every < 1)
        throw std::invalid_argument("log_every must be >= 1");

    const auto t0 = std::chrono::steady_clock::now();
    const size_t n = data.size();
    const size_t m = size_t(model.param_count());

    double delta = cfg.interpolation_delta;
    if (delta < 0.0) {
        double mean = 0.0;
        for (double v : data.y)
            mean += v;
        mean /= double(n);
        double var = 0.0;
        for (double v : data.y)
            var += (v - mean) * (v - mean);
        var /= double(n);
        delta = 1e-3 * var;
    }

    TrainReport report;
    report.interpolation_delta = delta;
    report.lambda = cfg.reg.lambda;

    std::vector<double>& theta = model.params();
    std::vector<double> grad(m);
    std::vector<double> last_good = theta;
    int last_good_epoch = -1;

    const bool full_batch = cfg.batch_size == 0 || size_t(cfg.batch_size) >= n;
    std::vector<uint32_t> order;
    if (!full_batch) {
        order.resize(n);
        for (size_t i = 0; i < n; ++i)
            order[i] = uint32_t(i);
    }
    Rng rng(cfg.seed);

    double lr = cfg.learning_rate;
    double prev_tracked = std::numeric_limits<double>::infinity();
    bool prev_phase_active = false;

    int e = 0;
    for (; e < cfg.epochs; ++e) {
        const bool penalty_active = cfg.reg.lambda != 0.0 && e >= cfg.warmup_epochs;
        if (penalty_active != prev_phase_active) {
            prev_tracked = std::numeric_limits<double>::infinity(); // objective changed
            prev_phase_active = penalty_active;
        }
        const bool log_point = (e % cfg.log_every == 0) || e == cfg.epochs - 1;

        double epoch_mse = std::numeric_limits<double>::quiet_NaN();
        double epoch_reg = 0.0;

        if (full_batch) {
            // One step; the gradient pass yields the pre-update MSE for free,
            // and the penalty pass yields R(theta) for free.
            epoch_mse = mse_gradient(model, data, std::span<double>(grad));
            if (penalty_active) {
                RegEval re = regularizer_subgradient(model, cfg.reg);
                epoch_reg = re.value;
                for (size_t j = 0; j < m; ++j)
                    grad[j] += re.grad[j];
            } else if (cfg.reg.lambda != 0.0 && log_point) {
                epoch_reg = regularizer_value(model, cfg.reg);
            }
            const double wd = weight_decay_term(cfg, theta);
            add_weight_decay_grad(cfg, theta, std::span<double>(grad));

            if (!std::isfinite(epoch_mse)) {
                report.diverged = true;
                report.diverged_epoch = e;
                theta = last_good;
                break;
            }
            last_good = theta;
            last_good_epoch = e;

            const double tracked = penalty_active ? epoch_mse + epoch_reg + wd : epoch_mse + wd;
            if (log_point) {
                report.trajectory.push_back({e, epoch_mse, epoch_reg, epoch_mse + epoch_reg + wd});
                // Checked at log points only, so log_every sets the decay
                // cadence; per-epoch checks would collapse the step during
                // normal subgradient chatter.
                if (cfg.halve_lr_on_increase && tracked > prev_tracked)
                    lr *= 0.5;
                prev_tracked = tracked;
            }

            for (size_t j = 0; j < m; ++j)
                theta[j] -= lr * grad[j];
        } else {
            // Objective snapshot before this epoch's updates, log points only.
            if (log_point) {
                epoch_mse = mse_loss(model, data);
                epoch_reg = cfg.reg.lambda != 0.0 ? regularizer_value(model, cfg.reg) : 0.0;
                const double wd = weight_decay_term(cfg, theta);
                if (!std::isfinite(epoch_mse)) {
                    report.diverged = true;
                    report.diverged_epoch = e;
                    theta = last_good;
                    break;
                }
                last_good = theta;
                last_good_epoch = e;
                report.trajectory.push_back({e, epoch_mse, epoch_reg, epoch_mse + epoch_reg + wd});
                const double tracked =
                    penalty_active ? epoch_mse + epoch_reg + wd : epoch_mse + wd;
                if (cfg.halve_lr_on_increase && tracked > prev_tracked)
                    lr *= 0.5;
                prev_tracked = tracked;
            }
            // Fisher-Yates shuffle, then fixed-size slices.
            for (size_t i = n - 1; i > 0; --i) {
                const size_t j = size_t(rng.uniform_index(uint64_t(i + 1)));
                std::swap(order[i], order[j]);
            }
            const size_t bs = size_t(cfg.batch_size);
            for (size_t start = 0; start < n; start += bs) {
                const size_t stop = std::min(n, start + bs);
                std::span<const uint32_t> idx(order.data() + start, stop - start);
                mse_gradient_batch(model, data, idx, std::span<double>(grad));
                if (penalty_active) {
                    RegEval re = regularizer_subgradient(model, cfg.reg);
                    for (size_t j = 0; j < m; ++j)
                        grad[j] += re.grad[j];
                }
                add_weight_decay_grad(cfg, theta, std::span<double>(grad));
                for (size_t j = 0; j < m; ++j)
                    theta[j] -= lr * grad[j];
            }
            if (!all_finite(theta)) {
                report.diverged = true;
                report.diverged_epoch = e;
                theta = last_good;
                break;
            }
        }
    }
    report.epochs_run = report.diverged ? std::max(last_good_epoch, 0) : e;

    // Final metrics at the (possibly restored) parameters.
    report.final_mse = mse_loss(model, data);
    const bool final_penalty =
        cfg.reg.lambda != 0.0 && (cfg.epochs == 0 || cfg.epochs - 1 >= cfg.warmup_epochs);
    RegEval re = regularizer_subgradient(model, cfg.reg);
    report.final_reg = re.value;
    if (!report.diverged && !std::isfinite(report.final_mse)) {
        report.diverged = true;
        report.diverged_epoch = cfg.epochs;
    }
    const double wd = weight_decay_term(cfg, theta);
    report.final_total = report.final_mse + report.final_reg + wd;
    report.trajectory.push_back(
        {report.diverged ? report.diverged_epoch : cfg.epochs, report.final_mse, report.final_reg,
         report.final_total});

    mse_gradient(model, data, std::span<double>(grad));
    if (final_penalty)
        for (size_t j = 0; j < m; ++j)
            grad[j] += re.grad[j];
    add_weight_decay_grad(cfg, theta, std::span<double>(grad));
    double res2 = 0.0;
    for (double g : grad)
        res2 += g * g;
    report.stationarity_residual = std::sqrt(res2);
    report.is_stationary =
        std::isfinite(report.stationarity_residual) && report.stationarity_residual <= cfg.stationarity_tol;
    report.is_interpolator = std::isfinite(report.final_mse) && report.final_mse <= delta;
    report.theta = theta;
    report.final_learning_rate = lr;
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

double theoretical_lambda(double sigma, int d, size_t n, double delta, double C0) {
    check_dim(d);
    if (sigma < 0.0)
        throw std::invalid_argument("sigma must be non-negative");
    if (n < 1)
        throw std::invalid_argument("n must be positive");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("delta must be in (0,1)");
    if (C0 <= 0.0)
        throw std::invalid_argument("C0 must be positive");
    return 4.0 * C0 * sigma * std::sqrt((double(d) + std::log(1.0 / delta)) / double(n));
}

double theoretical_n0(double sigma, int d, double mu, double L, int k, double delta,
                      double c_star, double C1) {
    check_dim(d);
    if (sigma < 0.0 || mu < 0.0 || L < 0.0 || k < 0)
        throw std::invalid_argument("sigma, mu, L, k must be non-negative");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("delta must be in (0,1)");
    if (c_star == 0.0)
        throw std::invalid_argument("c_star must be nonzero");
    if (C1 <= 0.0)
        throw std::invalid_argument("C1 must be positive");
    const double dd = double(d);
    return C1 * sigma * sigma * (dd * dd * mu * mu + L * L * double(k)) *
           (dd + std::log(1.0 / delta)) / (c_star * c_star);
}

} // namespace specbool
