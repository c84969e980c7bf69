#include "specbool/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "specbool/rng.hpp"

namespace specbool {

namespace {
constexpr size_t kChunk = 512; // batch rows processed per block in batched paths
}

// ---------------------------------------------------------------- Model base

void Model::eval_batch(const double* X, size_t n, double* out) const {
    const int d = dim();
    for (size_t i = 0; i < n; ++i)
        out[i] = eval(std::span<const double>(X + i * size_t(d), size_t(d)));
}

void Model::weighted_grad_accumulate(const double* X, const double* w, size_t n,
                                     double* acc) const {
    const int d = dim();
    const int m = param_count();
    std::vector<double> g(static_cast<size_t>(m));
    for (size_t i = 0; i < n; ++i) {
        param_gradient(std::span<const double>(X + i * size_t(d), size_t(d)),
                       std::span<double>(g));
        const double wi = w[i];
        for (int j = 0; j < m; ++j)
            acc[size_t(j)] += wi * g[size_t(j)];
    }
}

FunctionTable Model::eval_all() const {
    const int d = dim();
    check_dim(d);
    const size_t n = size_t(1) << d;
    FunctionTable table;
    table.d = d;
    table.values.resize(n);
    std::vector<double> X(kChunk * size_t(d));
    for (size_t base = 0; base < n; base += kChunk) {
        const size_t rows = std::min(kChunk, n - base);
        for (size_t r = 0; r < rows; ++r)
            index_to_point(uint32_t(base + r), d, X.data() + r * size_t(d));
        eval_batch(X.data(), rows, table.values.data() + base);
    }
    return table;
}

void Model::cube_weighted_grad(const std::vector<double>& w, double* acc) const {
    const int d = dim();
    check_dim(d);
    const size_t n = size_t(1) << d;
    if (w.size() != n)
        throw std::invalid_argument("cube weight vector has wrong size");
    std::vector<double> X(kChunk * size_t(d));
    for (size_t base = 0; base < n; base += kChunk) {
        const size_t rows = std::min(kChunk, n - base);
        for (size_t r = 0; r < rows; ++r)
            index_to_point(uint32_t(base + r), d, X.data() + r * size_t(d));
        weighted_grad_accumulate(X.data(), w.data() + base, rows, acc);
    }
}

// -------------------------------------------------------------- LinearModel

LinearModel::LinearModel(int d) : d_(d) {
    check_dim(d);
    theta_.assign(size_t(d), 0.0);
}

double LinearModel::eval(std::span<const double> x) const {
    if (x.size() != size_t(d_))
        throw std::invalid_argument("input dimension mismatch");
    double acc = 0.0;
    for (int j = 0; j < d_; ++j)
        acc += theta_[size_t(j)] * x[size_t(j)];
    return acc;
}

void LinearModel::param_gradient(std::span<const double> x, std::span<double> grad) const {
    if (x.size() != size_t(d_) || grad.size() != size_t(d_))
        throw std::invalid_argument("dimension mismatch");
    std::copy(x.begin(), x.end(), grad.begin());
}

// ---------------------------------------------------------- PolynomialModel

PolynomialModel::PolynomialModel(int d, std::vector<uint32_t> support)
    : d_(d), support_(std::move(support)) {
    check_dim(d);
    const uint64_t n = uint64_t(1) << d;
    int64_t prev = -1;
    for (uint32_t m : support_) {
        if (m >= n)
            throw std::invalid_argument("support mask out of range");
        if (int64_t(m) <= prev)
            throw std::invalid_argument("support masks must be strictly increasing");
        prev = m;
    }
    theta_.assign(support_.size(), 0.0);
}

PolynomialModel PolynomialModel::full_support(int d) {
    check_dim(d);
    const size_t n = size_t(1) << d;
    std::vector<uint32_t> masks(n);
    for (size_t m = 0; m < n; ++m)
        masks[m] = uint32_t(m);
    return PolynomialModel(d, std::move(masks));
}

double PolynomialModel::eval(std::span<const double> x) const {
    const uint32_t idx = point_to_index(x);
    double acc = 0.0;
    for (size_t t = 0; t < support_.size(); ++t)
        acc += theta_[t] * parity_sign(idx, support_[t]);
    return acc;
}

void PolynomialModel::param_gradient(std::span<const double> x, std::span<double> grad) const {
    if (grad.size() != support_.size())
        throw std::invalid_argument("gradient size mismatch");
    const uint32_t idx = point_to_index(x);
    for (size_t t = 0; t < support_.size(); ++t)
        grad[t] = parity_sign(idx, support_[t]);
}

FunctionTable PolynomialModel::eval_all() const {
    FunctionTable table;
    table.d = d_;
    table.values.assign(size_t(1) << d_, 0.0);
    for (size_t t = 0; t < support_.size(); ++t)
        table.values[support_[t]] = theta_[t];
    fwht_in_place(std::span<double>(table.values));
    return table;
}

void PolynomialModel::cube_weighted_grad(const std::vector<double>& w, double* acc) const {
    const size_t n = size_t(1) << d_;
    if (w.size() != n)
        throw std::invalid_argument("cube weight vector has wrong size");
    // sum_i w_i * chi_m(x_i) = (H_u w)[m], one transform for every mask.
    std::vector<double> t = w;
    fwht_in_place(std::span<double>(t));
    for (size_t j = 0; j < support_.size(); ++j)
        acc[j] += t[support_[j]];
}

Spectrum PolynomialModel::to_spectrum(double prune_eps) const {
    Spectrum s;
    s.d = d_;
    for (size_t t = 0; t < support_.size(); ++t)
        if (std::fabs(theta_[t]) > prune_eps)
            s.entries.push_back({support_[t], theta_[t]});
    return s;
}

// ------------------------------------------------------------------ MlpModel

MlpModel::MlpModel(std::vector<int> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2)
        throw std::invalid_argument("mlp needs at least input and output widths");
    check_dim(widths_.front());
    if (widths_.back() != 1)
        throw std::invalid_argument("mlp output width must be 1");
    for (int wdt : widths_)
        if (wdt < 1)
            throw std::invalid_argument("mlp widths must be positive");
    layer_count_ = int(widths_.size()) - 1;
    size_t total = 0;
    offsets_.resize(size_t(layer_count_));
    for (int l = 0; l < layer_count_; ++l) {
        const size_t in = size_t(widths_[size_t(l)]);
        const size_t out = size_t(widths_[size_t(l) + 1]);
        offsets_[size_t(l)].w = total;
        total += in * out;
        offsets_[size_t(l)].b = total;
        total += out;
    }
    theta_.assign(total, 0.0);
}

void MlpModel::init_xavier(uint64_t seed) {
    Rng rng(seed);
    for (int l = 0; l < layer_count_; ++l) {
        const size_t in = size_t(widths_[size_t(l)]);
        const size_t out = size_t(widths_[size_t(l) + 1]);
        const double a = std::sqrt(6.0 / double(in + out));
        double* w = theta_.data() + weight_offset(l);
        for (size_t i = 0; i < in * out; ++i)
            w[i] = rng.uniform(-a, a);
        double* b = theta_.data() + bias_offset(l);
        std::fill(b, b + out, 0.0);
    }
}

double MlpModel::eval(std::span<const double> x) const {
    if (x.size() != size_t(widths_.front()))
        throw std::invalid_argument("input dimension mismatch");
    double out;
    eval_batch(x.data(), 1, &out);
    return out;
}

void MlpModel::eval_batch(const double* X, size_t n, double* out) const {
    const size_t d = size_t(widths_.front());
    const int max_w = *std::max_element(widths_.begin(), widths_.end());
    std::vector<double> bufa(kChunk * size_t(max_w)), bufb(kChunk * size_t(max_w));
    for (size_t base = 0; base < n; base += kChunk) {
        const size_t rows = std::min(kChunk, n - base);
        std::memcpy(bufa.data(), X + base * d, rows * d * sizeof(double));
        const double* cur = bufa.data();
        size_t cur_w = d;
        double* nxt = bufb.data();
        for (int l = 0; l < layer_count_; ++l) {
            const size_t in = size_t(widths_[size_t(l)]);
            const size_t out_w = size_t(widths_[size_t(l) + 1]);
            const double* W = theta_.data() + weight_offset(l);
            const double* b = theta_.data() + bias_offset(l);
            const bool last = (l == layer_count_ - 1);
            for (size_t r = 0; r < rows; ++r) {
                const double* a = cur + r * cur_w;
                double* z = nxt + r * out_w;
                for (size_t o = 0; o < out_w; ++o) {
                    const double* wrow = W + o * in;
                    double acc = b[o];
                    for (size_t i = 0; i < in; ++i)
                        acc += wrow[i] * a[i];
                    z[o] = last ? acc : std::tanh(acc);
                }
            }
            std::swap(bufa, bufb);
            cur = bufa.data();
            nxt = bufb.data();
            cur_w = out_w;
        }
        for (size_t r = 0; r < rows; ++r)
            out[base + r] = cur[r * cur_w];
    }
}

void MlpModel::param_gradient(std::span<const double> x, std::span<double> grad) const {
    if (grad.size() != theta_.size())
        throw std::invalid_argument("gradient size mismatch");
    std::fill(grad.begin(), grad.end(), 0.0);
    const double w1 = 1.0;
    weighted_grad_accumulate(x.data(), &w1, 1, grad.data());
}

void MlpModel::weighted_grad_accumulate(const double* X, const double* w, size_t n,
                                        double* acc) const {
    const size_t d = size_t(widths_.front());
    const int L = layer_count_;
    const int max_w = *std::max_element(widths_.begin(), widths_.end());
    // Post-activation values per layer (act[0] = inputs), kept for backprop.
    std::vector<std::vector<double>> act(size_t(L) + 1);
    for (int l = 0; l <= L; ++l)
        act[size_t(l)].resize(kChunk * size_t(widths_[size_t(l)]));
    std::vector<double> delta(kChunk * size_t(max_w)), delta_prev(kChunk * size_t(max_w));

    for (size_t base = 0; base < n; base += kChunk) {
        const size_t rows = std::min(kChunk, n - base);
        std::memcpy(act[0].data(), X + base * d, rows * d * sizeof(double));
        // Forward pass, storing activations.
        for (int l = 0; l < L; ++l) {
            const size_t in = size_t(widths_[size_t(l)]);
            const size_t out_w = size_t(widths_[size_t(l) + 1]);
            const double* W = theta_.data() + weight_offset(l);
            const double* b = theta_.data() + bias_offset(l);
            const bool last = (l == L - 1);
            const double* A = act[size_t(l)].data();
            double* Z = act[size_t(l) + 1].data();
            for (size_t r = 0; r < rows; ++r) {
                const double* a = A + r * in;
                double* z = Z + r * out_w;
                for (size_t o = 0; o < out_w; ++o) {
                    const double* wrow = W + o * in;
                    double s = b[o];
                    for (size_t i = 0; i < in; ++i)
                        s += wrow[i] * a[i];
                    z[o] = last ? s : std::tanh(s);
                }
            }
        }
        // Backward pass: output "error" is the per-sample weight.
        for (size_t r = 0; r < rows; ++r)
            delta[r] = w[base + r];
        for (int l = L - 1; l >= 0; --l) {
            const size_t in = size_t(widths_[size_t(l)]);
            const size_t out_w = size_t(widths_[size_t(l) + 1]);
            const double* W = theta_.data() + weight_offset(l);
            double* dW = acc + weight_offset(l);
            double* db = acc + bias_offset(l);
            const double* A = act[size_t(l)].data();
            for (size_t r = 0; r < rows; ++r) {
                const double* a = A + r * in;
                const double* dl = delta.data() + r * out_w;
                for (size_t o = 0; o < out_w; ++o) {
                    const double g = dl[o];
                    if (g == 0.0)
                        continue;
                    double* dwrow = dW + o * in;
                    for (size_t i = 0; i < in; ++i)
                        dwrow[i] += g * a[i];
                    db[o] += g;
                }
            }
            if (l > 0) {
                // delta_prev = (delta . W) * tanh'(= 1 - a^2 on layer l input).
                for (size_t r = 0; r < rows; ++r) {
                    const double* dl = delta.data() + r * out_w;
                    double* dp = delta_prev.data() + r * in;
                    std::fill(dp, dp + in, 0.0);
                    for (size_t o = 0; o < out_w; ++o) {
                        const double g = dl[o];
                        if (g == 0.0)
                            continue;
                        const double* wrow = W + o * in;
                        for (size_t i = 0; i < in; ++i)
                            dp[i] += g * wrow[i];
                    }
                    const double* a = A + r * in;
                    for (size_t i = 0; i < in; ++i)
                        dp[i] *= 1.0 - a[i] * a[i];
                }
                std::swap(delta, delta_prev);
            }
        }
    }
}

// ------------------------------------------------------------------ factory

std::unique_ptr<Model> init_model(const ModelSpec& spec, uint64_t seed) {
    if (spec.kind == "linear") {
        return std::make_unique<LinearModel>(spec.d);
    }
    if (spec.kind == "polynomial") {
        if (spec.support.empty())
            return std::make_unique<PolynomialModel>(PolynomialModel::full_support(spec.d));
        return std::make_unique<PolynomialModel>(spec.d, spec.support);
    }
    if (spec.kind == "mlp") {
        std::vector<int> widths;
        widths.push_back(spec.d);
        widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
        widths.push_back(1);
        auto m = std::make_unique<MlpModel>(std::move(widths));
        m->init_xavier(seed);
        return m;
    }
    throw std::invalid_argument("unknown model kind: " + spec.kind);
}

ModelSpec parse_model_spec(const std::string& text, int d) {
    ModelSpec spec;
    spec.d = d;
    auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string tail = colon == std::string::npos ? "" : text.substr(colon + 1);
    auto parse_ints = [](const std::string& s) {
        std::vector<long> out;
        size_t pos = 0;
        while (pos < s.size()) {
            size_t next = s.find(',', pos);
            if (next == std::string::npos)
                next = s.size();
            out.push_back(std::stol(s.substr(pos, next - pos)));
            pos = next + 1;
        }
        return out;
    };
    if (head == "linear") {
        if (!tail.empty())
            throw std::invalid_argument("linear model takes no arguments");
        spec.kind = "linear";
    } else if (head == "poly") {
        spec.kind = "polynomial";
        if (tail.empty() || tail == "full") {
            // empty support = full support
        } else {
            for (long v : parse_ints(tail)) {
                if (v < 0)
                    throw std::invalid_argument("negative mask in poly support");
                spec.support.push_back(uint32_t(v));
            }
            std::sort(spec.support.begin(), spec.support.end());
            spec.support.erase(std::unique(spec.support.begin(), spec.support.end()),
                               spec.support.end());
        }
    } else if (head == "mlp") {
        spec.kind = "mlp";
        if (tail.empty())
            throw std::invalid_argument("mlp model needs hidden widths, e.g. mlp:64,64,64");
        for (long v : parse_ints(tail)) {
            if (v < 1)
                throw std::invalid_argument("mlp widths must be positive");
            spec.hidden.push_back(int(v));
        }
    } else {
        throw std::invalid_argument("unknown model: " + text);
    }
    return spec;
}

} // namespace specbool
