#include "specbool/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "specbool/rng.hpp"

namespace specbool {

namespace {

void check_inputs(const Model& model, const Model& reference, const Dataset& inputs) {
    check_dataset(inputs);
    if (model.dim() != inputs.d || reference.dim() != inputs.d)
        throw std::invalid_argument("model/input dimension mismatch");
}

// (1/n) sum_i (f_a(x_i) - f_b(x_i))^2 given precomputed reference values.
double mean_sq_diff(const Model& model, const Dataset& inputs,
                    const std::vector<double>& ref_values) {
    const size_t n = inputs.size();
    std::vector<double> f(n);
    model.eval_batch(inputs.X.data(), n, f.data());
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double r = f[i] - ref_values[i];
        acc += r * r;
    }
    return acc / double(n);
}

} // namespace

ErrSnapshot empirical_err(const Model& model, const Model& reference, const Dataset& inputs) {
    check_inputs(model, reference, inputs);
    const size_t n = inputs.size();
    std::vector<double> ref(n);
    reference.eval_batch(inputs.X.data(), n, ref.data());
    ErrSnapshot snap;
    snap.err = mean_sq_diff(model, inputs, ref);
    if (model.param_count() == reference.param_count()) {
        double acc = 0.0;
        for (int j = 0; j < model.param_count(); ++j) {
            const double t = model.params()[size_t(j)] - reference.params()[size_t(j)];
            acc += t * t;
        }
        snap.param_distance = std::sqrt(acc);
    }
    return snap;
}

double qg_min_ratio(const Model& reference, const Dataset& inputs,
                    const std::vector<std::vector<double>>& perturbations) {
    check_inputs(reference, reference, inputs);
    if (perturbations.empty())
        throw std::invalid_argument("no perturbations given");
    const size_t m = size_t(reference.param_count());
    std::vector<double> ref(inputs.size());
    reference.eval_batch(inputs.X.data(), inputs.size(), ref.data());
    auto pert = reference.clone();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& w : perturbations) {
        if (w.size() != m)
            throw std::invalid_argument("perturbation length mismatch");
        double norm2 = 0.0;
        for (double v : w)
            norm2 += v * v;
        if (norm2 == 0.0)
            throw std::domain_error("zero perturbation: ratio undefined");
        for (size_t j = 0; j < m; ++j)
            pert->params()[j] = reference.params()[j] + w[j];
        const double err = mean_sq_diff(*pert, inputs, ref);
        best = std::min(best, err / (norm2 / double(m)));
    }
    return best;
}

std::vector<QGRow> qg_estimate(const Model& reference, const Dataset& inputs,
                               std::span<const double> sigma_grid, int K, uint64_t seed) {
    check_inputs(reference, reference, inputs);
    if (K < 1)
        throw std::invalid_argument("K must be positive");
    if (sigma_grid.empty())
        throw std::invalid_argument("sigma grid is empty");
    const int m = reference.param_count();
    std::vector<QGRow> rows;
    for (size_t si = 0; si < sigma_grid.size(); ++si) {
        const double sigma = sigma_grid[si];
        if (sigma <= 0.0)
            throw std::invalid_argument("perturbation sigma must be positive");
        Rng rng(substream_seed(seed, si));
        std::vector<std::vector<double>> ws(static_cast<size_t>(K));
        for (auto& w : ws) {
            w.resize(size_t(m));
            for (double& v : w)
                v = sigma * rng.gaussian();
        }
        QGRow row;
        row.sigma = sigma;
        row.min_ratio = qg_min_ratio(reference, inputs, ws);
        row.min_ratio_per_param = row.min_ratio / double(m);
        row.K = K;
        row.M = m;
        rows.push_back(row);
    }
    return rows;
}

double rsi_min_ratio(const Model& reference, const Dataset& inputs,
                     const std::vector<std::vector<double>>& perturbations) {
    check_inputs(reference, reference, inputs);
    if (perturbations.empty())
        throw std::invalid_argument("no perturbations given");
    const size_t m = size_t(reference.param_count());
    const size_t n = inputs.size();
    // err(theta) = (1/n) sum_i (f_theta(x_i) - f_ref(x_i))^2 is exactly the
    // MSE against pseudo-labels f_ref(x_i).
    Dataset pseudo;
    pseudo.d = inputs.d;
    pseudo.X = inputs.X;
    pseudo.y.resize(n);
    reference.eval_batch(inputs.X.data(), n, pseudo.y.data());
    auto pert = reference.clone();
    std::vector<double> grad(m);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& w : perturbations) {
        if (w.size() != m)
            throw std::invalid_argument("perturbation length mismatch");
        double norm2 = 0.0;
        for (double v : w)
            norm2 += v * v;
        if (norm2 == 0.0)
            throw std::domain_error("zero perturbation: ratio undefined");
        for (size_t j = 0; j < m; ++j)
            pert->params()[j] = reference.params()[j] + w[j];
        mse_gradient(*pert, pseudo, std::span<double>(grad));
        double dot = 0.0;
        for (size_t j = 0; j < m; ++j)
            dot += w[j] * grad[j];
        best = std::min(best, dot / norm2);
    }
    return best;
}

std::vector<RsiRow> rsi_estimate(const Model& reference, const Dataset& inputs,
                                 std::span<const double> sigma_grid, int K, uint64_t seed) {
    check_inputs(reference, reference, inputs);
    if (K < 1)
        throw std::invalid_argument("K must be positive");
    const int m = reference.param_count();
    std::vector<RsiRow> rows;
    for (size_t si = 0; si < sigma_grid.size(); ++si) {
        const double sigma = sigma_grid[si];
        if (sigma <= 0.0)
            throw std::invalid_argument("perturbation sigma must be positive");
        Rng rng(substream_seed(seed, si));
        std::vector<std::vector<double>> ws(static_cast<size_t>(K));
        for (auto& w : ws) {
            w.resize(size_t(m));
            for (double& v : w)
                v = sigma * rng.gaussian();
        }
        rows.push_back({sigma, rsi_min_ratio(reference, inputs, ws), K, m});
    }
    return rows;
}

double gradient_covariance_bound(const Model& model, double tol, int max_iters, uint64_t seed) {
    const int d = model.dim();
    check_dim(d);
    if (tol <= 0.0 || max_iters < 1)
        throw std::invalid_argument("bad tolerance or iteration cap");
    const size_t n = size_t(1) << d;
    const size_t m = size_t(model.param_count());

    // Cache per-point gradients when affordable; otherwise recompute each
    // sweep (same arithmetic order, just slower).
    const bool cache = n * m <= (size_t(1) << 25);
    std::vector<double> G;
    std::vector<double> x(static_cast<size_t>(d)), g(m);
    if (cache) {
        G.resize(n * m);
        for (size_t i = 0; i < n; ++i) {
            index_to_point(uint32_t(i), d, x.data());
            model.param_gradient(std::span<const double>(x), std::span<double>(g));
            std::copy(g.begin(), g.end(), G.begin() + i * m);
        }
    }

    Rng rng(seed);
    std::vector<double> v(m), u(m);
    double norm = 0.0;
    for (double& vi : v) {
        vi = rng.gaussian();
        norm += vi * vi;
    }
    norm = std::sqrt(norm);
    for (double& vi : v)
        vi /= norm;

    const double scale = 1.0 / double(n);
    double lam_prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iters; ++it) {
        std::fill(u.begin(), u.end(), 0.0);
        for (size_t i = 0; i < n; ++i) {
            const double* gi;
            if (cache) {
                gi = G.data() + i * m;
            } else {
                index_to_point(uint32_t(i), d, x.data());
                model.param_gradient(std::span<const double>(x), std::span<double>(g));
                gi = g.data();
            }
            double dot = 0.0;
            for (size_t j = 0; j < m; ++j)
                dot += gi[j] * v[j];
            dot *= scale;
            for (size_t j = 0; j < m; ++j)
                u[j] += dot * gi[j];
        }
        double lam = 0.0;
        for (size_t j = 0; j < m; ++j)
            lam += v[j] * u[j]; // Rayleigh quotient (v is unit)
        double unorm = 0.0;
        for (double ui : u)
            unorm += ui * ui;
        unorm = std::sqrt(unorm);
        if (unorm == 0.0)
            return 0.0; // zero gradient field
        for (size_t j = 0; j < m; ++j)
            v[j] = u[j] / unorm;
        if (std::fabs(lam - lam_prev) <= tol * std::max(1.0, std::fabs(lam)))
            return lam;
        lam_prev = lam;
    }
    throw std::runtime_error("gradient_covariance_bound: power iteration did not converge");
}

NoiseCheck noise_linf_check(int d, size_t n, double sigma, double delta, int trials,
                            uint64_t seed, double C0) {
    check_dim(d);
    if (n < 1 || trials < 1)
        throw std::invalid_argument("n and trials must be positive");
    if (sigma < 0.0)
        throw std::invalid_argument("sigma must be non-negative");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("delta must be in (0,1)");
    const size_t cube = size_t(1) << d;
    NoiseCheck out;
    out.samples.resize(size_t(trials));
    std::vector<double> z(cube);
    for (int t = 0; t < trials; ++t) {
        Rng rng(substream_seed(seed, uint64_t(t)));
        std::fill(z.begin(), z.end(), 0.0);
        for (size_t i = 0; i < n; ++i) {
            const uint32_t idx = uint32_t(rng.uniform_index(cube));
            z[idx] += sigma * rng.gaussian() / double(n);
        }
        fwht_in_place(std::span<double>(z));
        double stat = 0.0;
        for (double v : z)
            stat = std::max(stat, std::fabs(v));
        out.samples[size_t(t)] = stat;
    }
    std::vector<double> sorted = out.samples;
    std::sort(sorted.begin(), sorted.end());
    // (1-delta) empirical quantile as an order statistic (1-based ceil).
    size_t pos = size_t(std::ceil((1.0 - delta) * double(trials)));
    pos = std::min(std::max<size_t>(pos, 1), size_t(trials));
    out.quantile = sorted[pos - 1];
    out.bound = C0 * sigma * std::sqrt((double(d) + std::log(1.0 / delta)) / double(n));
    out.envelope = 4.0 * out.bound;
    return out;
}

double r_squared(std::span<const double> predictions, std::span<const double> truths) {
    if (predictions.size() != truths.size())
        throw std::invalid_argument("prediction/truth length mismatch");
    if (truths.size() < 2)
        throw std::invalid_argument("r_squared needs at least 2 points");
    double mean = 0.0;
    for (double t : truths)
        mean += t;
    mean /= double(truths.size());
    double ss_tot = 0.0, ss_res = 0.0;
    for (size_t i = 0; i < truths.size(); ++i) {
        ss_tot += (truths[i] - mean) * (truths[i] - mean);
        ss_res += (predictions[i] - truths[i]) * (predictions[i] - truths[i]);
    }
    if (ss_tot == 0.0)
        throw std::invalid_argument("r_squared undefined for constant truths");
    return 1.0 - ss_res / ss_tot;
}

std::vector<uint32_t> top_k_masks(const Spectrum& s, int k) {
    if (k < 1)
        throw std::invalid_argument("k must be positive");
    std::vector<const SpectrumEntry*> nz;
    for (const auto& e : s.entries)
        if (e.coeff != 0.0)
            nz.push_back(&e);
    std::sort(nz.begin(), nz.end(), [](const SpectrumEntry* a, const SpectrumEntry* b) {
        const double ma = std::fabs(a->coeff), mb = std::fabs(b->coeff);
        if (ma != mb)
            return ma > mb;
        return a->mask < b->mask;
    });
    std::vector<uint32_t> out;
    for (size_t i = 0; i < nz.size() && i < size_t(k); ++i)
        out.push_back(nz[i]->mask);
    return out;
}

SupportMetrics support_metrics(const Spectrum& estimated, const Spectrum& truth, int k) {
    std::vector<uint32_t> est = top_k_masks(estimated, k);
    std::vector<uint32_t> tru = top_k_masks(truth, k);
    std::sort(est.begin(), est.end());
    std::sort(tru.begin(), tru.end());
    std::vector<uint32_t> inter;
    std::set_intersection(est.begin(), est.end(), tru.begin(), tru.end(),
                          std::back_inserter(inter));
    SupportMetrics out;
    out.precision = est.empty() ? 0.0 : double(inter.size()) / double(est.size());
    out.recall = tru.empty() ? 0.0 : double(inter.size()) / double(tru.size());
    return out;
}

} // namespace specbool
