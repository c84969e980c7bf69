#include "specbool/hypercube.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace specbool {

void check_dim(int d) {
    if (d < 1 || d > kMaxDim)
        throw std::invalid_argument("dimension d must be in [1, " + std::to_string(kMaxDim) +
                                    "], got " + std::to_string(d));
}

std::vector<double> index_to_point(uint32_t index, int d) {
    check_dim(d);
    std::vector<double> x(d);
    index_to_point(index, d, x.data());
    return x;
}

void index_to_point(uint32_t index, int d, double* out) {
    for (int j = 0; j < d; ++j)
        out[j] = (index >> j) & 1u ? -1.0 : 1.0;
}

uint32_t point_to_index(std::span<const double> x) {
    if (x.empty() || x.size() > size_t(kMaxDim))
        throw std::invalid_argument("point dimension out of range");
    uint32_t index = 0;
    for (size_t j = 0; j < x.size(); ++j) {
        if (x[j] == -1.0)
            index |= 1u << j;
        else if (x[j] != 1.0)
            throw std::invalid_argument("point coordinates must be +-1");
    }
    return index;
}

namespace {

template <typename T>
void fwht_impl(std::span<T> v) {
    const size_t n = v.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fwht length must be a power of two");
    for (size_t h = 1; h < n; h <<= 1) {
        for (size_t i = 0; i < n; i += h << 1) {
            for (size_t j = i; j < i + h; ++j) {
                T x = v[j];
                T y = v[j + h];
                v[j] = x + y;
                v[j + h] = x - y;
            }
        }
    }
}

} // namespace

void fwht_in_place(std::span<double> values) { fwht_impl(values); }
void fwht_in_place(std::span<int64_t> values) { fwht_impl(values); }

Spectrum function_to_spectrum(const FunctionTable& table, double prune_eps) {
    check_dim(table.d);
    const size_t n = size_t(1) << table.d;
    if (table.values.size() != n)
        throw std::invalid_argument("function table size does not match dimension");
    std::vector<double> buf = table.values;
    fwht_in_place(std::span<double>(buf));
    const double scale = 1.0 / double(n);
    Spectrum s;
    s.d = table.d;
    for (size_t m = 0; m < n; ++m) {
        double coeff = buf[m] * scale;
        if (std::fabs(coeff) > prune_eps)
            s.entries.push_back({uint32_t(m), coeff});
    }
    return s;
}

FunctionTable spectrum_to_function(const Spectrum& spectrum) {
    check_spectrum(spectrum);
    const size_t n = size_t(1) << spectrum.d;
    FunctionTable table;
    table.d = spectrum.d;
    table.values.assign(n, 0.0);
    for (const auto& e : spectrum.entries)
        table.values[e.mask] = e.coeff;
    fwht_in_place(std::span<double>(table.values));
    return table;
}

double eval_spectrum_at(const Spectrum& spectrum, std::span<const double> x) {
    if (x.size() != size_t(spectrum.d))
        throw std::invalid_argument("point dimension does not match spectrum");
    double acc = 0.0;
    for (const auto& e : spectrum.entries) {
        double term = e.coeff;
        for (uint32_t bits = e.mask; bits; bits &= bits - 1)
            term *= x[__builtin_ctz(bits)];
        acc += term;
    }
    return acc;
}

void check_spectrum(const Spectrum& spectrum) {
    check_dim(spectrum.d);
    const uint64_t n = uint64_t(1) << spectrum.d;
    int64_t prev = -1;
    for (const auto& e : spectrum.entries) {
        if (e.mask >= n)
            throw std::invalid_argument("spectrum mask out of range for dimension");
        if (int64_t(e.mask) <= prev)
            throw std::invalid_argument("spectrum masks must be strictly increasing");
        prev = e.mask;
    }
}

double spectrum_l1(const Spectrum& spectrum) {
    double acc = 0.0;
    for (const auto& e : spectrum.entries)
        acc += std::fabs(e.coeff);
    return acc;
}

HadamardL1Extremum hadamard_l1_extremum(int d) {
    if (d < 1 || d > 4)
        throw std::invalid_argument("hadamard_l1_extremum: exhaustive search only supports d in [1,4]");
    const uint32_t n = 1u << d;           // vector length 2^d
    const uint64_t patterns = 1ull << n;  // 2^(2^d) sign vectors
    HadamardL1Extremum best;
    std::vector<int64_t> v(n);
    for (uint64_t p = 0; p < patterns; ++p) {
        for (uint32_t i = 0; i < n; ++i)
            v[i] = (p >> i) & 1ull ? -1 : 1;
        std::vector<int64_t> t = v;
        fwht_in_place(std::span<int64_t>(t));
        int64_t l1 = 0;
        for (int64_t c : t)
            l1 += std::llabs(c);
        if (double(l1) > best.max_l1) {
            best.max_l1 = double(l1);
            best.witness.assign(n, 0.0);
            for (uint32_t i = 0; i < n; ++i)
                best.witness[i] = double(v[i]);
        }
    }
    return best;
}

} // namespace specbool
