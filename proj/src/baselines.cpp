#include "specbool/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "specbool/rng.hpp"

namespace specbool {

std::vector<double> feature_map(std::span<const double> x, int d) {
    if (d < 1 || d > 16)
        throw std::invalid_argument("feature_map supports d in [1, 16]");
    if (x.size() != size_t(d))
        throw std::invalid_argument("point dimension mismatch");
    const uint32_t idx = point_to_index(x);
    const size_t n = size_t(1) << d;
    std::vector<double> row(n);
    for (size_t m = 0; m < n; ++m)
        row[m] = parity_sign(idx, uint32_t(m));
    return row;
}

namespace {

// Design matrix with dense rows when they fit the memory budget and
// recomputed rows otherwise; both paths accumulate in the same order, so
// results are bit-identical either way.
class Design {
public:
    Design(const Dataset& data, size_t budget_doubles) : n_(data.size()), d_(data.d) {
        if (d_ < 1 || d_ > 16)
            throw std::invalid_argument("design matrix supports d in [1, 16]");
        cols_ = size_t(1) << d_;
        idx_.resize(n_);
        for (size_t i = 0; i < n_; ++i)
            idx_[i] = point_to_index(data.point(i));
        dense_ = n_ * cols_ <= budget_doubles;
        if (dense_) {
            rows_.resize(n_ * cols_);
            for (size_t i = 0; i < n_; ++i)
                fill_row(idx_[i], rows_.data() + i * cols_);
        }
    }

    size_t rows() const { return n_; }
    size_t cols() const { return cols_; }

    // out = Phi a
    void apply(const double* a, double* out) const {
        std::vector<double> scratch;
        const double* row = nullptr;
        for (size_t i = 0; i < n_; ++i) {
            row = row_ptr(i, scratch);
            double acc = 0.0;
            for (size_t m = 0; m < cols_; ++m)
                acc += row[m] * a[m];
            out[i] = acc;
        }
    }

    // acc = Phi^T r
    void apply_t(const double* r, double* acc) const {
        std::fill(acc, acc + cols_, 0.0);
        std::vector<double> scratch;
        const double* row = nullptr;
        for (size_t i = 0; i < n_; ++i) {
            row = row_ptr(i, scratch);
            const double ri = r[i];
            if (ri == 0.0)
                continue;
            for (size_t m = 0; m < cols_; ++m)
                acc[m] += row[m] * ri;
        }
    }

private:
    void fill_row(uint32_t idx, double* row) const {
        for (size_t m = 0; m < cols_; ++m)
            row[m] = parity_sign(idx, uint32_t(m));
    }
    const double* row_ptr(size_t i, std::vector<double>& scratch) const {
        if (dense_)
            return rows_.data() + i * cols_;
        scratch.resize(cols_);
        fill_row(idx_[i], scratch.data());
        return scratch.data();
    }

    size_t n_;
    int d_;
    size_t cols_ = 0;
    bool dense_ = false;
    std::vector<uint32_t> idx_;
    std::vector<double> rows_;
};

double lasso_objective(const Design& design, const Dataset& data, const std::vector<double>& a,
                       double lambda, std::vector<double>& fit) {
    design.apply(a.data(), fit.data());
    double mse = 0.0;
    for (size_t i = 0; i < data.size(); ++i) {
        const double r = fit[i] - data.y[i];
        mse += r * r;
    }
    mse /= double(data.size());
    double l1 = 0.0;
    for (double v : a)
        l1 += std::fabs(v);
    return mse + lambda * l1;
}

// grad = (2/n) Phi^T (Phi a - y)
void lasso_gradient(const Design& design, const Dataset& data, const std::vector<double>& a,
                    std::vector<double>& resid, std::vector<double>& grad) {
    design.apply(a.data(), resid.data());
    const double scale = 2.0 / double(data.size());
    for (size_t i = 0; i < data.size(); ++i)
        resid[i] = scale * (resid[i] - data.y[i]);
    design.apply_t(resid.data(), grad.data());
}

double soft_threshold(double v, double t) {
    if (v > t)
        return v - t;
    if (v < -t)
        return v + t;
    return 0.0;
}

double kkt_from_grad(const std::vector<double>& alpha, const std::vector<double>& grad,
                     double lambda) {
    double viol = 0.0;
    for (size_t m = 0; m < alpha.size(); ++m) {
        double v;
        if (alpha[m] == 0.0)
            v = std::max(0.0, std::fabs(grad[m]) - lambda);
        else
            v = std::fabs(grad[m] + (alpha[m] > 0.0 ? lambda : -lambda));
        viol = std::max(viol, v);
    }
    return viol;
}

// Largest eigenvalue of (2/n) Phi^T Phi by power iteration.
double lipschitz_estimate(const Design& design, size_t n) {
    const size_t N = design.cols();
    Rng rng(0x9e3779b97f4a7c15ull);
    std::vector<double> v(N), u(N), fit(design.rows());
    double norm = 0.0;
    for (size_t m = 0; m < N; ++m) {
        v[m] = rng.gaussian();
        norm += v[m] * v[m];
    }
    norm = std::sqrt(norm);
    for (double& x : v)
        x /= norm;
    double lam = 0.0;
    const double scale = 2.0 / double(n);
    for (int it = 0; it < 300; ++it) {
        design.apply(v.data(), fit.data());
        design.apply_t(fit.data(), u.data());
        double rayleigh = 0.0, unorm = 0.0;
        for (size_t m = 0; m < N; ++m) {
            u[m] *= scale;
            rayleigh += v[m] * u[m];
            unorm += u[m] * u[m];
        }
        unorm = std::sqrt(unorm);
        if (unorm == 0.0)
            return 0.0; // Phi^T Phi v = 0; degenerate design handled by caller
        for (size_t m = 0; m < N; ++m)
            v[m] = u[m] / unorm;
        if (it > 4 && std::fabs(unorm - lam) <= 1e-12 * std::max(1.0, unorm)) {
            lam = unorm;
            break;
        }
        lam = unorm;
    }
    return lam;
}

} // namespace

LassoResult lasso_fista(const Dataset& data, const LassoConfig& cfg) {
    check_dataset(data);
    if (cfg.lambda < 0.0)
        throw std::invalid_argument("lambda must be non-negative");
    if (cfg.max_iters < 1)
        throw std::invalid_argument("max_iters must be positive");
    Design design(data, cfg.memory_budget);
    const size_t N = design.cols();
    const size_t n = data.size();

    LassoResult out;
    double L = lipschitz_estimate(design, n) * 1.02;
    if (L <= 0.0)
        L = 1.0;
    double s = 1.0 / L;
    out.step = s;

    std::vector<double> x(N, 0.0), x_prev(N, 0.0), yv(N, 0.0), cand(N);
    std::vector<double> grad(N), resid(n), fit(n);
    double t = 1.0;
    double F_x = lasso_objective(design, data, x, cfg.lambda, fit);
    double F_prev_iter = F_x;
    int streak = 0;

    int it = 0;
    for (; it < cfg.max_iters; ++it) {
        lasso_gradient(design, data, yv, resid, grad);
        for (size_t m = 0; m < N; ++m)
            cand[m] = soft_threshold(yv[m] - s * grad[m], s * cfg.lambda);
        double F_cand = lasso_objective(design, data, cand, cfg.lambda, fit);
        if (F_cand > F_x) {
            // Momentum overshot: restart from the last iterate with a plain
            // proximal step, which cannot increase the objective at s <= 1/L
            // (halve s until that holds, covering a low Lipschitz estimate).
            t = 1.0;
            for (int tries = 0; tries < 60; ++tries) {
                lasso_gradient(design, data, x, resid, grad);
                for (size_t m = 0; m < N; ++m)
                    cand[m] = soft_threshold(x[m] - s * grad[m], s * cfg.lambda);
                F_cand = lasso_objective(design, data, cand, cfg.lambda, fit);
                if (F_cand <= F_x)
                    break;
                s *= 0.5;
            }
            if (F_cand > F_x) { // could not descend: keep the last iterate
                cand = x;
                F_cand = F_x;
            }
        }
        std::swap(x_prev, x);
        x = cand;
        const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double mom = (t - 1.0) / t_new;
        for (size_t m = 0; m < N; ++m)
            yv[m] = x[m] + mom * (x[m] - x_prev[m]);
        t = t_new;
        F_x = F_cand;
        if (cfg.record_trace)
            out.trace.push_back(F_x);

        if (std::fabs(F_prev_iter - F_x) <= cfg.tol * std::max(1.0, std::fabs(F_x)))
            ++streak;
        else
            streak = 0;
        F_prev_iter = F_x;

        if (streak >= 10 || (it + 1) % 25 == 0 || it + 1 == cfg.max_iters) {
            lasso_gradient(design, data, x, resid, grad);
            const double kkt = kkt_from_grad(x, grad, cfg.lambda);
            if (kkt <= cfg.kkt_target || streak >= 10) {
                out.converged = kkt <= cfg.kkt_target || streak >= 10;
                out.kkt_violation = kkt;
                ++it;
                break;
            }
            out.kkt_violation = kkt;
        }
    }
    out.iters = it;

    out.alpha = x;
    out.mse = 0.0;
    design.apply(x.data(), fit.data());
    for (size_t i = 0; i < n; ++i) {
        const double r = fit[i] - data.y[i];
        out.mse += r * r;
    }
    out.mse /= double(n);
    out.l1 = 0.0;
    for (double v : x)
        out.l1 += std::fabs(v);
    out.objective = out.mse + cfg.lambda * out.l1;
    out.spectrum.d = data.d;
    for (size_t m = 0; m < N; ++m)
        if (std::fabs(x[m]) > cfg.prune_eps)
            out.spectrum.entries.push_back({uint32_t(m), x[m]});
    // kkt_violation may be stale if we exited on max_iters between checks.
    lasso_gradient(design, data, x, resid, grad);
    out.kkt_violation = kkt_from_grad(x, grad, cfg.lambda);
    return out;
}

double kkt_residual(const Dataset& data, const std::vector<double>& alpha, double lambda) {
    check_dataset(data);
    Design design(data, size_t(64) << 20);
    if (alpha.size() != design.cols())
        throw std::invalid_argument("alpha length must be 2^d");
    std::vector<double> resid(data.size()), grad(design.cols());
    lasso_gradient(design, data, alpha, resid, grad);
    return kkt_from_grad(alpha, grad, lambda);
}

Spectrum ordinary_least_squares(const Dataset& data, std::vector<uint32_t> support) {
    check_dataset(data);
    if (support.empty())
        throw std::invalid_argument("support is empty");
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
    const uint64_t cube = uint64_t(1) << data.d;
    for (uint32_t m : support)
        if (m >= cube)
            throw std::invalid_argument("support mask out of range");

    const size_t k = support.size();
    const size_t n = data.size();
    // Feature columns restricted to the support.
    std::vector<double> B(n * k);
    for (size_t i = 0; i < n; ++i) {
        const uint32_t idx = point_to_index(data.point(i));
        for (size_t j = 0; j < k; ++j)
            B[i * k + j] = parity_sign(idx, support[j]);
    }
    const double jitter = 1e-10;
    std::vector<double> A(k * k, 0.0), b(k, 0.0);
    for (size_t i = 0; i < n; ++i) {
        const double* row = B.data() + i * k;
        for (size_t j = 0; j < k; ++j) {
            b[j] += row[j] * data.y[i];
            for (size_t l = j; l < k; ++l)
                A[j * k + l] += row[j] * row[l];
        }
    }
    for (size_t j = 0; j < k; ++j) {
        b[j] /= double(n);
        for (size_t l = j; l < k; ++l) {
            A[j * k + l] /= double(n);
            A[l * k + j] = A[j * k + l];
        }
        A[j * k + j] += jitter;
    }
    // Cholesky A = C C^T.
    std::vector<double> C(k * k, 0.0);
    for (size_t j = 0; j < k; ++j) {
        for (size_t l = 0; l <= j; ++l) {
            double s = A[j * k + l];
            for (size_t p = 0; p < l; ++p)
                s -= C[j * k + p] * C[l * k + p];
            if (l == j) {
                if (s <= 0.0)
                    throw std::runtime_error("ordinary_least_squares: singular normal equations");
                C[j * k + j] = std::sqrt(s);
            } else {
                C[j * k + l] = s / C[l * k + l];
            }
        }
    }
    // Solve C z = b, then C^T w = z.
    std::vector<double> z(k), w(k);
    for (size_t j = 0; j < k; ++j) {
        double s = b[j];
        for (size_t p = 0; p < j; ++p)
            s -= C[j * k + p] * z[p];
        z[j] = s / C[j * k + j];
    }
    for (size_t jj = k; jj-- > 0;) {
        double s = z[jj];
        for (size_t p = jj + 1; p < k; ++p)
            s -= C[p * k + jj] * w[p];
        w[jj] = s / C[jj * k + jj];
    }
    Spectrum out;
    out.d = data.d;
    for (size_t j = 0; j < k; ++j)
        out.entries.push_back({support[j], w[j]});
    return out;
}

} // namespace specbool
