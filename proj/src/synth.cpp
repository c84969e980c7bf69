#include "specbool/synth.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "specbool/rng.hpp"

namespace specbool {

namespace {

// Random mask with exactly `order` bits among d coordinates (partial
// Fisher-Yates over the coordinate list).
uint32_t random_mask(int d, int order, Rng& rng) {
    std::vector<int> coords(static_cast<size_t>(d));
    for (int j = 0; j < d; ++j)
        coords[size_t(j)] = j;
    uint32_t mask = 0;
    for (int t = 0; t < order; ++t) {
        const size_t pick = size_t(t) + size_t(rng.uniform_index(uint64_t(d - t)));
        std::swap(coords[size_t(t)], coords[pick]);
        mask |= 1u << coords[size_t(t)];
    }
    return mask;
}

void sort_entries(Spectrum& s) {
    std::sort(s.entries.begin(), s.entries.end(),
              [](const SpectrumEntry& a, const SpectrumEntry& b) { return a.mask < b.mask; });
}

} // namespace

GroundTruth gen_monomial(int d, int order, uint64_t seed) {
    check_dim(d);
    if (order < 1 || order > d)
        throw std::invalid_argument("monomial order must be in [1, d]");
    Rng rng(seed);
    GroundTruth gt;
    gt.family = "monomial";
    gt.params = {{"order", double(order)}};
    gt.spectrum.d = d;
    gt.spectrum.entries.push_back({random_mask(d, order, rng), 1.0});
    return gt;
}

GroundTruth gen_power_law(int d, int order, int k, double gamma, uint64_t seed) {
    check_dim(d);
    if (order < 1 || order > d)
        throw std::invalid_argument("order must be in [1, d]");
    if (k < 1)
        throw std::invalid_argument("k must be positive");
    // Number of masks of this order must accommodate k distinct picks.
    double count = 1.0;
    for (int t = 0; t < order; ++t)
        count *= double(d - t) / double(t + 1);
    if (double(k) > count)
        throw std::invalid_argument("k exceeds the number of masks of the given order");

    Rng rng(seed);
    std::set<uint32_t> used;
    std::vector<uint32_t> masks;
    while (masks.size() < size_t(k)) {
        const uint32_t m = random_mask(d, order, rng);
        if (used.insert(m).second)
            masks.push_back(m);
    }
    GroundTruth gt;
    gt.family = "power_law";
    gt.params = {{"order", double(order)}, {"k", double(k)}, {"gamma", gamma}};
    gt.spectrum.d = d;
    double max_mag = 0.0;
    std::vector<double> coeffs(static_cast<size_t>(k));
    for (int j = 0; j < k; ++j) {
        const double mag = std::pow(double(j + 1), -gamma);
        coeffs[size_t(j)] = rng.sign() * mag;
        max_mag = std::max(max_mag, mag);
    }
    for (int j = 0; j < k; ++j)
        gt.spectrum.entries.push_back({masks[size_t(j)], coeffs[size_t(j)] / max_mag});
    sort_entries(gt.spectrum);
    return gt;
}

GroundTruth gen_staircase(int d, double ratio, uint64_t seed) {
    check_dim(d);
    if (d < 8)
        throw std::invalid_argument("staircase family needs d >= 8");
    Rng rng(seed);

    // Three distinct singleton coordinates.
    std::vector<int> singles;
    while (singles.size() < 3) {
        const int c = int(rng.uniform_index(uint64_t(d)));
        if (std::find(singles.begin(), singles.end(), c) == singles.end())
            singles.push_back(c);
    }
    std::set<uint32_t> used;
    std::vector<uint32_t> order1, order2, order3;
    for (int c : singles) {
        order1.push_back(1u << c);
        used.insert(1u << c);
    }
    // Two order-2 supersets per singleton; the extension coordinate avoids
    // every singleton (so the chains don't collapse onto each other).
    for (int c : singles) {
        int added = 0;
        while (added < 2) {
            const int e = int(rng.uniform_index(uint64_t(d)));
            if (std::find(singles.begin(), singles.end(), e) != singles.end())
                continue;
            const uint32_t m = (1u << c) | (1u << e);
            if (!used.insert(m).second)
                continue;
            order2.push_back(m);
            ++added;
        }
    }
    // Order-3 supersets: two for each of the first three order-2 masks, one
    // for each of the remaining three.
    for (size_t t = 0; t < order2.size(); ++t) {
        const int want = t < 3 ? 2 : 1;
        int added = 0;
        while (added < want) {
            const int e = int(rng.uniform_index(uint64_t(d)));
            if (order2[t] & (1u << e))
                continue;
            const uint32_t m = order2[t] | (1u << e);
            if (__builtin_popcount(m) != 3 || !used.insert(m).second)
                continue;
            order3.push_back(m);
            ++added;
        }
    }

    GroundTruth gt;
    gt.family = "staircase";
    gt.params = {{"ratio", ratio}};
    gt.spectrum.d = d;
    for (uint32_t m : order1)
        gt.spectrum.entries.push_back({m, 1.0});
    for (uint32_t m : order2)
        gt.spectrum.entries.push_back({m, ratio});
    for (uint32_t m : order3)
        gt.spectrum.entries.push_back({m, ratio * ratio});
    sort_entries(gt.spectrum);
    return gt;
}

GroundTruth qg_preset() {
    GroundTruth gt;
    gt.family = "qg_preset";
    gt.spectrum.d = 13;
    gt.spectrum.entries = {{1u, 3.0}, {6u, 4.0}, {24u, 5.0}, {2048u, 1.0}};
    return gt;
}

Dataset sample_dataset(const Spectrum& truth, size_t n, double sigma, uint64_t seed) {
    check_spectrum(truth);
    if (n < 1)
        throw std::invalid_argument("n must be positive");
    if (sigma < 0.0)
        throw std::invalid_argument("sigma must be non-negative");
    Rng rng(seed);
    const int d = truth.d;
    const uint64_t cube = uint64_t(1) << d;
    // Dense table lookup keeps sampling O(1) per point at moderate d; fall
    // back to direct sparse evaluation when the table would be too large.
    FunctionTable table;
    const bool use_table = d <= 20;
    if (use_table)
        table = spectrum_to_function(truth);
    Dataset data;
    data.d = d;
    data.X.resize(n * size_t(d));
    data.y.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const uint32_t idx = uint32_t(rng.uniform_index(cube));
        double* row = data.X.data() + i * size_t(d);
        index_to_point(idx, d, row);
        double y = use_table ? table.values[idx]
                             : eval_spectrum_at(truth, std::span<const double>(row, size_t(d)));
        if (sigma > 0.0)
            y += sigma * rng.gaussian();
        data.y[i] = y;
    }
    return data;
}

} // namespace specbool
