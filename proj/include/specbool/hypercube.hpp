#pragma once

// Boolean hypercube {-1,+1}^d indexing, the fast Walsh-Hadamard transform,
// and dense/sparse representations of functions on the cube.
//
// Conventions (fixed project-wide):
//  * Point index i in [0, 2^d) encodes x via x_j = (-1)^{bit_{j-1}(i)},
//    i.e. bit 0 of the index flips coordinate x_1; index 0 is the all-(+1)
//    point.
//  * A monomial is identified with a bitmask m; chi_m(x) = prod_{j in m} x_j
//    and chi_m(index i) = (-1)^{popcount(i & m)}.
//  * H_u denotes the unnormalized Hadamard matrix H_u[i][m] =
//    (-1)^{popcount(i & m)}; fwht_in_place applies H_u.  H_u * H_u = 2^d I.
//  * A spectrum holds coefficients alpha with f = H_u alpha, i.e.
//    alpha = 2^{-d} H_u f.

#include <cstdint>
#include <span>
#include <vector>

namespace specbool {

inline constexpr int kMaxDim = 24;

// Dense table of function values over the whole cube, in index order.
struct FunctionTable {
    int d = 0;
    std::vector<double> values; // size 2^d

    size_t size() const { return values.size(); }
};

struct SpectrumEntry {
    uint32_t mask = 0;
    double coeff = 0.0;
};

// Sparse Walsh coefficients; entries sorted by strictly increasing mask.
struct Spectrum {
    int d = 0;
    std::vector<SpectrumEntry> entries;
};

// Throws std::invalid_argument unless 1 <= d <= kMaxDim.
void check_dim(int d);

// Sign of chi_m at point index i: +1 or -1.
inline double parity_sign(uint32_t index, uint32_t mask) {
    return (__builtin_popcount(index & mask) & 1) ? -1.0 : 1.0;
}

// Decode a point index into its {-1,+1} coordinate vector (length d).
std::vector<double> index_to_point(uint32_t index, int d);

// Write coordinates of `index` into out[0..d); out must have room.
void index_to_point(uint32_t index, int d, double* out);

// Inverse of index_to_point; x entries must be exactly +-1.
uint32_t point_to_index(std::span<const double> x);

// In-place unnormalized Walsh-Hadamard butterfly; values.size() must be a
// power of two.  Applying twice multiplies by 2^d.
void fwht_in_place(std::span<double> values);
void fwht_in_place(std::span<int64_t> values);

// alpha = 2^{-d} H_u f, keeping entries with |coeff| > prune_eps.
Spectrum function_to_spectrum(const FunctionTable& table, double prune_eps = 0.0);

// f = H_u alpha (exact inverse of function_to_spectrum at prune_eps = 0).
FunctionTable spectrum_to_function(const Spectrum& spectrum);

// Evaluate a sparse spectrum at one point, O(k*d); x.size() must equal d.
double eval_spectrum_at(const Spectrum& spectrum, std::span<const double> x);

// Validate d, mask ordering and range; throws std::invalid_argument.
void check_spectrum(const Spectrum& spectrum);

// sum_m |coeff_m|.
double spectrum_l1(const Spectrum& spectrum);

// Exhaustive max of ||H_u v||_1 over v in {-1,+1}^{2^d}; only d <= 4 is
// allowed (the search is 2^{2^d}).  Returns the max and one maximizer.
struct HadamardL1Extremum {
    double max_l1 = 0.0;
    std::vector<double> witness;
};
HadamardL1Extremum hadamard_l1_extremum(int d);

} // namespace specbool
